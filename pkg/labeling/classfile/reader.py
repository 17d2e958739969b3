"""
Class-file reader.

Turns the raw bytes of one ``.class`` file into a ClassModel with every
constant-pool reference resolved. Attributes other than ``Code`` are
skipped; any structural problem surfaces as MalformedClassFile carrying
the byte offset at which it was detected.
"""

import struct

from ..errors import DescriptorSyntax, MalformedClassFile, UnsupportedVersion
from . import opcodes
from .descriptor import parse_field_descriptor, parse_method_descriptor
from .model import (
    ACC_ABSTRACT,
    ACC_NATIVE,
    Branch,
    ClassModel,
    Const,
    ExceptionHandler,
    FieldGet,
    FieldId,
    FieldPut,
    Instruction,
    Invoke,
    Load,
    MethodModel,
    Other,
    Return,
    StackOp,
    Store,
    Throw,
)

MAGIC = 0xCAFEBABE
MIN_MAJOR_VERSION = 45
MAX_MAJOR_VERSION = 65

CONSTANT_UTF8 = 1
CONSTANT_INTEGER = 3
CONSTANT_FLOAT = 4
CONSTANT_LONG = 5
CONSTANT_DOUBLE = 6
CONSTANT_CLASS = 7
CONSTANT_STRING = 8
CONSTANT_FIELDREF = 9
CONSTANT_METHODREF = 10
CONSTANT_INTERFACE_METHODREF = 11
CONSTANT_NAME_AND_TYPE = 12
CONSTANT_METHOD_HANDLE = 15
CONSTANT_METHOD_TYPE = 16
CONSTANT_DYNAMIC = 17
CONSTANT_INVOKE_DYNAMIC = 18
CONSTANT_MODULE = 19
CONSTANT_PACKAGE = 20

# Fixed payload format of every non-UTF8 constant.
_CONSTANT_FORMATS = {
    CONSTANT_INTEGER: '>i',
    CONSTANT_FLOAT: '>I',
    CONSTANT_LONG: '>q',
    CONSTANT_DOUBLE: '>Q',
    CONSTANT_CLASS: '>H',
    CONSTANT_STRING: '>H',
    CONSTANT_FIELDREF: '>HH',
    CONSTANT_METHODREF: '>HH',
    CONSTANT_INTERFACE_METHODREF: '>HH',
    CONSTANT_NAME_AND_TYPE: '>HH',
    CONSTANT_METHOD_HANDLE: '>BH',
    CONSTANT_METHOD_TYPE: '>H',
    CONSTANT_DYNAMIC: '>HH',
    CONSTANT_INVOKE_DYNAMIC: '>HH',
    CONSTANT_MODULE: '>H',
    CONSTANT_PACKAGE: '>H',
}

INDY_OWNER = '<indy>'


class ByteReader:
    """Bounds-checked big-endian cursor over a byte buffer."""

    def __init__(self, data, pos=0, end=None):
        self.data = data
        self.pos = pos
        self.end = len(data) if end is None else end

    def unpack(self, fmt):
        size = struct.calcsize(fmt)
        if self.pos + size > self.end:
            raise MalformedClassFile("unexpected end of data", self.pos)
        values = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return values

    def u1(self):
        return self.unpack('>B')[0]

    def u2(self):
        return self.unpack('>H')[0]

    def u4(self):
        return self.unpack('>I')[0]

    def s4(self):
        return self.unpack('>i')[0]

    def take(self, length):
        if length < 0 or self.pos + length > self.end:
            raise MalformedClassFile("unexpected end of data", self.pos)
        chunk = bytes(self.data[self.pos:self.pos + length])
        self.pos += length
        return chunk

    def skip(self, length):
        self.take(length)


def decode_modified_utf8(raw):
    try:
        return raw.decode('utf-8')
    except UnicodeDecodeError:
        pass
    text = raw.replace(b'\xc0\x80', b'\x00').decode('utf-8', 'surrogatepass')
    try:
        # Recombine surrogate pairs encoded as two 3-byte sequences.
        return text.encode('utf-16-be', 'surrogatepass').decode('utf-16-be')
    except UnicodeDecodeError:
        return text


class ConstantPool:
    def __init__(self, reader):
        count = reader.u2()
        if count == 0:
            raise MalformedClassFile("constant pool count is zero", reader.pos - 2)
        self.entries = [None] * count
        index = 1
        while index < count:
            tag_offset = reader.pos
            tag = reader.u1()
            if tag == CONSTANT_UTF8:
                length = reader.u2()
                start = reader.pos
                try:
                    value = decode_modified_utf8(reader.take(length))
                except UnicodeDecodeError:
                    raise MalformedClassFile("undecodable UTF8 constant", start)
                self.entries[index] = (tag, value)
            elif tag in _CONSTANT_FORMATS:
                self.entries[index] = (tag, reader.unpack(_CONSTANT_FORMATS[tag]))
            else:
                raise MalformedClassFile(f"unknown constant tag {tag}", tag_offset)
            # Longs and doubles take up two entries in the pool.
            index += 2 if tag in (CONSTANT_LONG, CONSTANT_DOUBLE) else 1

    def _entry(self, index, tags, offset):
        if not 0 < index < len(self.entries) or self.entries[index] is None:
            raise MalformedClassFile(f"bad constant pool index {index}", offset)
        tag, value = self.entries[index]
        if tag not in tags:
            raise MalformedClassFile(f"constant {index} has tag {tag}, expected {tags}", offset)
        return tag, value

    def utf8(self, index, offset=None):
        return self._entry(index, (CONSTANT_UTF8,), offset)[1]

    def class_name(self, index, offset=None):
        _, (name_index,) = self._entry(index, (CONSTANT_CLASS,), offset)
        return self.utf8(name_index, offset)

    def name_and_type(self, index, offset=None):
        _, (name_index, desc_index) = self._entry(index, (CONSTANT_NAME_AND_TYPE,), offset)
        return self.utf8(name_index, offset), self.utf8(desc_index, offset)

    def member_ref(self, index, tags, offset=None):
        _, (class_index, nat_index) = self._entry(index, tags, offset)
        name, descriptor = self.name_and_type(nat_index, offset)
        return self.class_name(class_index, offset), name, descriptor

    def invoke_dynamic(self, index, offset=None):
        """(bootstrap method index, call-site name, call-site descriptor)."""
        _, (bootstrap, nat_index) = self._entry(index, (CONSTANT_INVOKE_DYNAMIC,), offset)
        return (bootstrap,) + self.name_and_type(nat_index, offset)


def _dotted(internal_name):
    return internal_name.replace('/', '.')


def _skip_attributes(reader):
    for _ in range(reader.u2()):
        reader.u2()
        reader.skip(reader.u4())


def _method_descriptor(raw, offset):
    try:
        return parse_method_descriptor(raw)
    except DescriptorSyntax as exc:
        raise MalformedClassFile(f"descriptor syntax error: {exc}", offset) from exc


def _field_descriptor(raw, offset):
    try:
        return parse_field_descriptor(raw)
    except DescriptorSyntax as exc:
        raise MalformedClassFile(f"descriptor syntax error: {exc}", offset) from exc


def _read_switch(reader, pc, where, name):
    # Operands start at the next 4-byte boundary of the code array.
    while reader.pos % 4:
        reader.u1()
    default = reader.s4()
    targets = [pc + default]
    if name == 'tableswitch':
        low, high = reader.s4(), reader.s4()
        count = high - low + 1
        if count < 0 or count * 4 > reader.end - reader.pos:
            raise MalformedClassFile("bad tableswitch bounds", where)
        targets.extend(pc + reader.s4() for _ in range(count))
    else:
        npairs = reader.s4()
        if npairs < 0 or npairs * 8 > reader.end - reader.pos:
            raise MalformedClassFile("bad lookupswitch pair count", where)
        for _ in range(npairs):
            reader.s4()
            targets.append(pc + reader.s4())
    return tuple(dict.fromkeys(targets))


def decode_code(code, pool, file_offset=0):
    """Decode one Code array into a tuple of Instructions."""
    reader = ByteReader(code)
    instructions = []
    jsr_returns = []
    ret_positions = []
    while reader.pos < reader.end:
        pc = reader.pos
        where = file_offset + pc
        info = opcodes.lookup(reader.u1())
        kind = info.kind
        mnemonic = info.name

        if kind == 'wide':
            inner = opcodes.lookup(reader.u1())
            mnemonic = f'wide {inner.name}'
            if inner.name == 'iinc':
                reader.unpack('>Hh')
                insn = Other(0, 0)
            elif inner.kind in ('load', 'store', 'ret') and inner.slot is None:
                slot = reader.u2()
                if inner.kind == 'load':
                    insn = Load(slot, inner.wide)
                elif inner.kind == 'store':
                    insn = Store(slot, inner.wide)
                else:
                    insn = Branch(())
                    ret_positions.append(len(instructions))
            else:
                raise MalformedClassFile(f"opcode {inner.name} cannot be widened", where)
        elif kind == 'switch':
            insn = Branch(_read_switch(reader, pc, where, info.name), pop_count=1)
        else:
            operands = reader.unpack(info.fmt) if info.fmt else ()
            if kind == 'const':
                insn = Const(info.wide)
            elif kind == 'load':
                insn = Load(operands[0] if info.slot is None else info.slot, info.wide)
            elif kind == 'store':
                insn = Store(operands[0] if info.slot is None else info.slot, info.wide)
            elif kind == 'branch':
                insn = Branch((pc + operands[0],), pop_count=info.pops, falls_through=True)
            elif kind == 'goto':
                insn = Branch((pc + operands[0],))
            elif kind == 'jsr':
                insn = Branch((pc + operands[0],), pushes_return_address=True)
                jsr_returns.append(reader.pos)
            elif kind == 'ret':
                insn = Branch(())
                ret_positions.append(len(instructions))
            elif kind == 'return':
                insn = Return(info.pops == 1)
            elif kind == 'throw':
                insn = Throw()
            elif kind == 'stack':
                insn = StackOp(info.name)
            elif kind == 'field':
                owner, name, desc = pool.member_ref(operands[0], (CONSTANT_FIELDREF,), where)
                field = FieldId(_dotted(owner), name)
                field_type = _field_descriptor(desc, where)
                is_static = info.name.endswith('static')
                if info.name.startswith('get'):
                    insn = FieldGet(field, field_type, is_static)
                else:
                    insn = FieldPut(field, field_type, is_static)
            elif kind == 'invoke':
                invoke_kind = opcodes.INVOKE_KINDS[info.name]
                bootstrap = None
                if invoke_kind == 'dynamic':
                    owner = INDY_OWNER
                    bootstrap, name, desc = pool.invoke_dynamic(operands[0], where)
                else:
                    tags = (CONSTANT_METHODREF, CONSTANT_INTERFACE_METHODREF)
                    owner, name, desc = pool.member_ref(operands[0], tags, where)
                    owner = _dotted(owner)
                insn = Invoke(invoke_kind, owner, name, _method_descriptor(desc, where), bootstrap)
            elif kind == 'multianewarray':
                insn = Other(operands[1], 1)
            else:
                insn = Other(info.pops, info.pushes, info.wide)
        instructions.append(Instruction(pc, mnemonic, insn))

    offsets = {insn.offset for insn in instructions}
    returns = tuple(offset for offset in jsr_returns if offset in offsets)
    for position in ret_positions:
        old = instructions[position]
        instructions[position] = Instruction(old.offset, old.mnemonic, Branch(returns))
    for insn in instructions:
        if isinstance(insn.kind, Branch):
            for target in insn.kind.target_offsets:
                if target not in offsets:
                    raise MalformedClassFile(f"branch target {target} is not an instruction", file_offset + insn.offset)
        if isinstance(insn.kind, Branch) and insn.kind.falls_through and insn is instructions[-1]:
            raise MalformedClassFile("conditional branch falls off the end of the code", file_offset + insn.offset)
    return tuple(instructions)


def _read_code(reader, pool, attr_end):
    reader.u2()  # max_stack
    reader.u2()  # max_locals
    code_length = reader.u4()
    if code_length == 0:
        raise MalformedClassFile("empty Code attribute", reader.pos - 4)
    code_offset = reader.pos
    code = reader.take(code_length)
    instructions = decode_code(code, pool, code_offset)
    offsets = {insn.offset for insn in instructions}
    handlers = []
    for _ in range(reader.u2()):
        entry_offset = reader.pos
        start, end, handler, catch_index = reader.unpack('>HHHH')
        if start not in offsets or handler not in offsets or not (end in offsets or end == code_length) or end <= start:
            raise MalformedClassFile("bad exception table entry", entry_offset)
        catch_type = _dotted(pool.class_name(catch_index, entry_offset)) if catch_index else None
        handlers.append(ExceptionHandler(start, end, handler, catch_type))
    _skip_attributes(reader)
    if reader.pos != attr_end:
        raise MalformedClassFile("Code attribute length mismatch", reader.pos)
    return instructions, tuple(handlers)


def _read_method(reader, pool, owner):
    flags, name_index, desc_index = reader.unpack('>HHH')
    offset = reader.pos - 4
    name = pool.utf8(name_index, offset)
    descriptor = _method_descriptor(pool.utf8(desc_index, offset), offset)
    instructions = ()
    handlers = ()
    has_code = False
    for _ in range(reader.u2()):
        attr_offset = reader.pos
        attr_name = pool.utf8(reader.u2(), attr_offset)
        length = reader.u4()
        if attr_name == 'Code' and not has_code:
            has_code = True
            sub = ByteReader(reader.data, reader.pos, reader.pos + length)
            if sub.end > reader.end:
                raise MalformedClassFile("attribute overruns the class file", attr_offset)
            body = _read_code(sub, pool, sub.end)
            if not flags & (ACC_ABSTRACT | ACC_NATIVE):
                instructions, handlers = body
        reader.skip(length)
    return MethodModel(
        owner=owner,
        name=name,
        descriptor=descriptor,
        access_flags=flags,
        instructions=instructions,
        handlers=handlers,
        has_code=has_code,
    )


def _read_class(data, source):
    reader = ByteReader(data)
    if len(data) < 4 or reader.u4() != MAGIC:
        raise MalformedClassFile("bad magic number (not a class file)", 0)
    _minor, major = reader.unpack('>HH')
    if not MIN_MAJOR_VERSION <= major <= MAX_MAJOR_VERSION:
        raise UnsupportedVersion(major)
    pool = ConstantPool(reader)

    header_offset = reader.pos
    flags, this_index, super_index = reader.unpack('>HHH')
    binary_name = _dotted(pool.class_name(this_index, header_offset))
    if not binary_name or any(c in binary_name for c in ';(['):
        raise MalformedClassFile(f"bad class name {binary_name!r}", header_offset)
    super_name = _dotted(pool.class_name(super_index, header_offset)) if super_index else None

    for _ in range(reader.u2()):
        interface_offset = reader.pos
        pool.class_name(reader.u2(), interface_offset)

    for _ in range(reader.u2()):
        reader.unpack('>HHH')
        _skip_attributes(reader)

    methods = tuple(_read_method(reader, pool, binary_name) for _ in range(reader.u2()))
    _skip_attributes(reader)

    return ClassModel(
        binary_name=binary_name,
        super_name=super_name,
        methods=methods,
        source=source,
        access_flags=flags,
        major_version=major,
    )


def parse_class(data, source=None):
    """Parse one class file; raise MalformedClassFile or UnsupportedVersion."""
    try:
        return _read_class(memoryview(bytes(data)), source)
    except (MalformedClassFile, UnsupportedVersion):
        raise
    except (struct.error, IndexError, KeyError, ValueError, OverflowError) as exc:
        raise MalformedClassFile(f"undecodable class file: {exc}") from exc
