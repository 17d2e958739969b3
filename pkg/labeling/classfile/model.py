"""Immutable structural model of a parsed class file."""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

from .descriptor import MethodDescriptor, VoidType

ACC_STATIC = 0x0008
ACC_BRIDGE = 0x0040
ACC_NATIVE = 0x0100
ACC_ABSTRACT = 0x0400
ACC_SYNTHETIC = 0x1000


@dataclass(frozen=True)
class FieldId:
    owner: str
    name: str

    def __str__(self):
        return f"{self.owner}.{self.name}"


# ----------------------
# Instruction kinds
# ----------------------
@dataclass(frozen=True)
class Load:
    slot: int
    wide: bool = False


@dataclass(frozen=True)
class Store:
    slot: int
    wide: bool = False


@dataclass(frozen=True)
class Invoke:
    invoke_kind: str
    callee_owner: str
    callee_name: str
    callee_descriptor: MethodDescriptor
    # invokedynamic only: index into the BootstrapMethods attribute
    bootstrap_index: Optional[int] = None

    @property
    def has_receiver(self):
        return self.invoke_kind not in ('static', 'dynamic')

    @property
    def qualified_name(self):
        return f"{self.callee_owner}.{self.callee_name}"


@dataclass(frozen=True)
class FieldGet:
    field: FieldId
    field_type: object
    is_static: bool


@dataclass(frozen=True)
class FieldPut:
    field: FieldId
    field_type: object
    is_static: bool


@dataclass(frozen=True)
class Return:
    has_value: bool


@dataclass(frozen=True)
class Branch:
    target_offsets: Tuple[int, ...]
    pop_count: int = 0
    falls_through: bool = False
    pushes_return_address: bool = False


@dataclass(frozen=True)
class Const:
    wide: bool = False


@dataclass(frozen=True)
class StackOp:
    effect: str


@dataclass(frozen=True)
class Throw:
    pass


@dataclass(frozen=True)
class Other:
    pop_count: int
    push_count: int
    wide: bool = False


InstructionKind = Union[Load, Store, Invoke, FieldGet, FieldPut, Return, Branch, Const, StackOp, Throw, Other]


@dataclass(frozen=True)
class Instruction:
    offset: int
    mnemonic: str
    kind: InstructionKind


@dataclass(frozen=True)
class ExceptionHandler:
    start: int
    end: int
    handler: int
    catch_type: Optional[str]


@dataclass(frozen=True)
class SourceLocation:
    archive: str
    entry: str

    def __str__(self):
        return f"{self.archive}!{self.entry}" if self.entry else self.archive


# ----------------------
# Methods and classes
# ----------------------
@dataclass(frozen=True)
class MethodModel:
    owner: str
    name: str
    descriptor: MethodDescriptor
    access_flags: int = 0
    instructions: Tuple[Instruction, ...] = ()
    handlers: Tuple[ExceptionHandler, ...] = ()
    has_code: bool = False

    @property
    def is_static(self):
        return bool(self.access_flags & ACC_STATIC)

    @property
    def is_abstract_or_native(self):
        return bool(self.access_flags & (ACC_ABSTRACT | ACC_NATIVE))

    @property
    def is_bridge(self):
        return bool(self.access_flags & ACC_BRIDGE)

    @property
    def qualified_name(self):
        return f"{self.owner}.{self.name}"

    @property
    def param_count(self):
        """Number of parameter positions, counting the receiver of instance methods."""
        return len(self.descriptor.param_types) + (0 if self.is_static else 1)

    @property
    def returns_void(self):
        return isinstance(self.descriptor.return_type, VoidType)

    def invocations(self):
        return [insn.kind for insn in self.instructions if isinstance(insn.kind, Invoke)]


@dataclass(frozen=True)
class ClassModel:
    binary_name: str
    super_name: Optional[str]
    methods: Tuple[MethodModel, ...]
    source: Optional[SourceLocation] = None
    access_flags: int = 0
    major_version: int = 0

    @property
    def simple_name(self):
        return self.binary_name.rsplit('.', 1)[-1]

    @property
    def method_count(self):
        return len(self.methods)
