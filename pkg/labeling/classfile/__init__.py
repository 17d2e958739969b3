from .archive import ArchiveScan, ScanFailure, ScanSummary, scan_archive
from .descriptor import (
    VOID,
    ArrayType,
    MethodDescriptor,
    ObjectType,
    PrimitiveType,
    VoidType,
    parse_field_descriptor,
    parse_java_type,
    parse_method_descriptor,
)
from .model import (
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
    SourceLocation,
    StackOp,
    Store,
    Throw,
)
from .reader import parse_class

__all__ = [
    'ArchiveScan', 'ScanFailure', 'ScanSummary', 'scan_archive',
    'VOID', 'ArrayType', 'MethodDescriptor', 'ObjectType', 'PrimitiveType', 'VoidType',
    'parse_field_descriptor', 'parse_java_type', 'parse_method_descriptor',
    'Branch', 'ClassModel', 'Const', 'ExceptionHandler', 'FieldGet', 'FieldId', 'FieldPut',
    'Instruction', 'Invoke', 'Load', 'MethodModel', 'Other', 'Return', 'SourceLocation',
    'StackOp', 'Store', 'Throw', 'parse_class',
]
