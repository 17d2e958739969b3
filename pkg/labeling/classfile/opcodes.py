"""
JVM opcode table.

Each opcode is registered once with its mnemonic, the struct format of
its inline operands and how it behaves on the operand stack. Pop/push
counts are in values, not words; ``wide`` marks a category-2 result.
"""

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class OpInfo:
    code: int
    name: str
    fmt: Optional[str]
    kind: str
    pops: int = 0
    pushes: int = 0
    wide: bool = False
    slot: Optional[int] = None


OPTABLE = {}


def _op(name, code, fmt=None, kind='other', pops=0, pushes=0, wide=False, slot=None):
    assert code not in OPTABLE, name
    OPTABLE[code] = OpInfo(code, name, fmt, kind, pops, pushes, wide, slot)
    return code


def _loads(prefix, base, short_base, wide=False):
    _op(f'{prefix}load', base, '>B', 'load', wide=wide)
    for n in range(4):
        _op(f'{prefix}load_{n}', short_base + n, None, 'load', wide=wide, slot=n)


def _stores(prefix, base, short_base, wide=False):
    _op(f'{prefix}store', base, '>B', 'store', wide=wide)
    for n in range(4):
        _op(f'{prefix}store_{n}', short_base + n, None, 'store', wide=wide, slot=n)


def _arith(names, code, pops, wide_names=()):
    for offset, name in enumerate(names):
        _op(name, code + offset, None, 'other', pops=pops, pushes=1, wide=name in wide_names)


_op('nop', 0x00)
_op('aconst_null', 0x01, kind='const')
for _n, _name in enumerate(('iconst_m1', 'iconst_0', 'iconst_1', 'iconst_2', 'iconst_3', 'iconst_4', 'iconst_5')):
    _op(_name, 0x02 + _n, kind='const')
_op('lconst_0', 0x09, kind='const', wide=True)
_op('lconst_1', 0x0a, kind='const', wide=True)
_op('fconst_0', 0x0b, kind='const')
_op('fconst_1', 0x0c, kind='const')
_op('fconst_2', 0x0d, kind='const')
_op('dconst_0', 0x0e, kind='const', wide=True)
_op('dconst_1', 0x0f, kind='const', wide=True)
_op('bipush', 0x10, '>b', 'const')
_op('sipush', 0x11, '>h', 'const')
_op('ldc', 0x12, '>B', 'const')
_op('ldc_w', 0x13, '>H', 'const')
_op('ldc2_w', 0x14, '>H', 'const', wide=True)

_loads('i', 0x15, 0x1a)
_loads('l', 0x16, 0x1e, wide=True)
_loads('f', 0x17, 0x22)
_loads('d', 0x18, 0x26, wide=True)
_loads('a', 0x19, 0x2a)

_arith(('iaload', 'laload', 'faload', 'daload', 'aaload', 'baload', 'caload', 'saload'),
       0x2e, 2, wide_names=('laload', 'daload'))

_stores('i', 0x36, 0x3b)
_stores('l', 0x37, 0x3f, wide=True)
_stores('f', 0x38, 0x43)
_stores('d', 0x39, 0x47, wide=True)
_stores('a', 0x3a, 0x4b)

for _n, _name in enumerate(('iastore', 'lastore', 'fastore', 'dastore', 'aastore', 'bastore', 'castore', 'sastore')):
    _op(_name, 0x4f + _n, pops=3)

for _n, _name in enumerate(('pop', 'pop2', 'dup', 'dup_x1', 'dup_x2', 'dup2', 'dup2_x1', 'dup2_x2', 'swap')):
    _op(_name, 0x57 + _n, kind='stack')

_BINARY = ('iadd', 'ladd', 'fadd', 'dadd', 'isub', 'lsub', 'fsub', 'dsub',
           'imul', 'lmul', 'fmul', 'dmul', 'idiv', 'ldiv', 'fdiv', 'ddiv',
           'irem', 'lrem', 'frem', 'drem')
_arith(_BINARY, 0x60, 2, wide_names=tuple(n for n in _BINARY if n[0] in 'ld'))
_arith(('ineg', 'lneg', 'fneg', 'dneg'), 0x74, 1, wide_names=('lneg', 'dneg'))
_SHIFTS = ('ishl', 'lshl', 'ishr', 'lshr', 'iushr', 'lushr', 'iand', 'land', 'ior', 'lor', 'ixor', 'lxor')
_arith(_SHIFTS, 0x78, 2, wide_names=tuple(n for n in _SHIFTS if n[0] == 'l'))
_op('iinc', 0x84, '>Bb')
_CONVERSIONS = ('i2l', 'i2f', 'i2d', 'l2i', 'l2f', 'l2d', 'f2i', 'f2l', 'f2d',
                'd2i', 'd2l', 'd2f', 'i2b', 'i2c', 'i2s')
_arith(_CONVERSIONS, 0x85, 1, wide_names=('i2l', 'i2d', 'l2d', 'f2l', 'f2d', 'd2l'))
_arith(('lcmp', 'fcmpl', 'fcmpg', 'dcmpl', 'dcmpg'), 0x94, 2)

for _n, _name in enumerate(('ifeq', 'ifne', 'iflt', 'ifge', 'ifgt', 'ifle')):
    _op(_name, 0x99 + _n, '>h', 'branch', pops=1)
for _n, _name in enumerate(('if_icmpeq', 'if_icmpne', 'if_icmplt', 'if_icmpge', 'if_icmpgt', 'if_icmple',
                            'if_acmpeq', 'if_acmpne')):
    _op(_name, 0x9f + _n, '>h', 'branch', pops=2)
_op('goto', 0xa7, '>h', 'goto')
_op('jsr', 0xa8, '>h', 'jsr')
_op('ret', 0xa9, '>B', 'ret')
_op('tableswitch', 0xaa, None, 'switch', pops=1)
_op('lookupswitch', 0xab, None, 'switch', pops=1)
for _n, _name in enumerate(('ireturn', 'lreturn', 'freturn', 'dreturn', 'areturn')):
    _op(_name, 0xac + _n, kind='return', pops=1)
_op('return', 0xb1, kind='return')

_op('getstatic', 0xb2, '>H', 'field')
_op('putstatic', 0xb3, '>H', 'field')
_op('getfield', 0xb4, '>H', 'field')
_op('putfield', 0xb5, '>H', 'field')
_op('invokevirtual', 0xb6, '>H', 'invoke')
_op('invokespecial', 0xb7, '>H', 'invoke')
_op('invokestatic', 0xb8, '>H', 'invoke')
_op('invokeinterface', 0xb9, '>HBB', 'invoke')
_op('invokedynamic', 0xba, '>HBB', 'invoke')

_op('new', 0xbb, '>H', pushes=1)
_op('newarray', 0xbc, '>B', pops=1, pushes=1)
_op('anewarray', 0xbd, '>H', pops=1, pushes=1)
_op('arraylength', 0xbe, pops=1, pushes=1)
_op('athrow', 0xbf, kind='throw', pops=1)
_op('checkcast', 0xc0, '>H', pops=1, pushes=1)
_op('instanceof', 0xc1, '>H', pops=1, pushes=1)
_op('monitorenter', 0xc2, pops=1)
_op('monitorexit', 0xc3, pops=1)
_op('wide', 0xc4, None, 'wide')
_op('multianewarray', 0xc5, '>HB', 'multianewarray', pushes=1)
_op('ifnull', 0xc6, '>h', 'branch', pops=1)
_op('ifnonnull', 0xc7, '>h', 'branch', pops=1)
_op('goto_w', 0xc8, '>i', 'goto')
_op('jsr_w', 0xc9, '>i', 'jsr')
_op('breakpoint', 0xca)
_op('impdep1', 0xfe)
_op('impdep2', 0xff)

INVOKE_KINDS = {
    'invokevirtual': 'virtual',
    'invokespecial': 'special',
    'invokestatic': 'static',
    'invokeinterface': 'interface',
    'invokedynamic': 'dynamic',
}


def lookup(code):
    """Return the OpInfo for ``code``; unassigned opcodes decode as a no-op."""
    info = OPTABLE.get(code)
    if info is None:
        return OpInfo(code, f'unknown_{code:#04x}', None, 'other')
    return info
