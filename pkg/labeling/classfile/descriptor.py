"""
Field and method descriptors (the ``(IJ[Ljava/lang/String;)Z`` grammar).

Object types keep the internal (slash-separated) class name so that
rendering a parsed descriptor reproduces the raw string exactly.
"""

from dataclasses import dataclass
from typing import Tuple, Union

from ..errors import DescriptorSyntax

PRIMITIVES = {
    'B': 'byte',
    'C': 'char',
    'D': 'double',
    'F': 'float',
    'I': 'int',
    'J': 'long',
    'S': 'short',
    'Z': 'boolean',
}
PRIMITIVE_TAGS = {name: tag for tag, name in PRIMITIVES.items()}
PRIMITIVE_NAMES = tuple(sorted(PRIMITIVE_TAGS))

MAX_ARRAY_DIMENSIONS = 255


@dataclass(frozen=True)
class PrimitiveType:
    name: str

    @property
    def descriptor(self):
        return PRIMITIVE_TAGS[self.name]

    @property
    def java_name(self):
        return self.name

    @property
    def simple_name(self):
        return self.name

    @property
    def is_wide(self):
        return self.name in ('long', 'double')


@dataclass(frozen=True)
class ObjectType:
    internal_name: str

    @property
    def descriptor(self):
        return f"L{self.internal_name};"

    @property
    def class_name(self):
        return self.internal_name.replace('/', '.')

    @property
    def java_name(self):
        return self.class_name

    @property
    def simple_name(self):
        return self.internal_name.rsplit('/', 1)[-1]

    is_wide = False


@dataclass(frozen=True)
class ArrayType:
    element: Union[PrimitiveType, ObjectType]
    dimensions: int

    @property
    def descriptor(self):
        return '[' * self.dimensions + self.element.descriptor

    @property
    def java_name(self):
        return self.element.java_name + '[]' * self.dimensions

    @property
    def simple_name(self):
        return self.element.simple_name

    is_wide = False


@dataclass(frozen=True)
class VoidType:
    descriptor = 'V'
    java_name = 'void'
    simple_name = 'void'
    is_wide = False


VOID = VoidType()

TypeRef = Union[PrimitiveType, ObjectType, ArrayType]


@dataclass(frozen=True)
class MethodDescriptor:
    param_types: Tuple[TypeRef, ...]
    return_type: Union[TypeRef, VoidType]

    def render(self):
        params = ''.join(t.descriptor for t in self.param_types)
        return f"({params}){self.return_type.descriptor}"

    def __str__(self):
        return self.render()

    @property
    def returns_void(self):
        return isinstance(self.return_type, VoidType)

    @property
    def slot_count(self):
        return sum(2 if t.is_wide else 1 for t in self.param_types)


def _parse_field_type(raw, index):
    """Parse one field type starting at ``index``; return (type, next index)."""
    dims = 0
    while index < len(raw) and raw[index] == '[':
        dims += 1
        if dims > MAX_ARRAY_DIMENSIONS:
            raise DescriptorSyntax(raw, index, "too many array dimensions")
        index += 1
    if index >= len(raw):
        raise DescriptorSyntax(raw, index, "unexpected end")
    tag = raw[index]
    if tag in PRIMITIVES:
        element = PrimitiveType(PRIMITIVES[tag])
        index += 1
    elif tag == 'L':
        end = raw.find(';', index + 1)
        if end == -1:
            raise DescriptorSyntax(raw, len(raw), "unterminated class name")
        name = raw[index + 1:end]
        if not name:
            raise DescriptorSyntax(raw, end, "empty class name")
        for offset, char in enumerate(name, start=index + 1):
            if char in '.[()':
                raise DescriptorSyntax(raw, offset)
        element = ObjectType(name)
        index = end + 1
    else:
        raise DescriptorSyntax(raw, index)
    if dims:
        return ArrayType(element, dims), index
    return element, index


def parse_field_descriptor(raw):
    if not raw:
        raise DescriptorSyntax(raw, 0, "empty descriptor")
    field_type, index = _parse_field_type(raw, 0)
    if index != len(raw):
        raise DescriptorSyntax(raw, index, "trailing characters")
    return field_type


def parse_method_descriptor(raw):
    if not raw:
        raise DescriptorSyntax(raw, 0, "empty descriptor")
    if raw[0] != '(':
        raise DescriptorSyntax(raw, 0, "expected '('")
    index = 1
    params = []
    while True:
        if index >= len(raw):
            raise DescriptorSyntax(raw, index, "unexpected end")
        if raw[index] == ')':
            index += 1
            break
        param, index = _parse_field_type(raw, index)
        params.append(param)
    if index >= len(raw):
        raise DescriptorSyntax(raw, index, "missing return type")
    if raw[index] == 'V':
        return_type = VOID
        index += 1
    else:
        return_type, index = _parse_field_type(raw, index)
    if index != len(raw):
        raise DescriptorSyntax(raw, index, "trailing characters")
    return MethodDescriptor(tuple(params), return_type)


def parse_java_type(name):
    """Parse a source-style type name (``int``, ``java.lang.String[]``, ``void``)."""
    text = name.strip()
    if not text:
        raise ValueError("empty type name")
    if text == 'void':
        return VOID
    dims = 0
    while text.endswith('[]'):
        dims += 1
        text = text[:-2].rstrip()
    if not text or any(c in text for c in ';()[]/ '):
        raise ValueError(f"not a type name: {name!r}")
    if text in PRIMITIVE_TAGS:
        element = PrimitiveType(text)
    else:
        element = ObjectType(text.replace('.', '/'))
    return ArrayType(element, dims) if dims else element
