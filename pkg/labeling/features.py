"""
Feature catalog and method vectorization.

A Lexicon supplies the vocabulary (name keywords, type-name fragments and
parameter-count buckets); build_catalog crosses it with every FeatureType
into an ordered, content-hashed Catalog; vectorize evaluates the whole
catalog against one method and its FlowFacts.
"""

from dataclasses import dataclass, field
import hashlib
import json
import logging
from pathlib import Path
import re
from typing import Tuple

from django.db import models
import numpy as np

from .classfile.descriptor import PRIMITIVE_NAMES, ArrayType, PrimitiveType, VoidType
from .conf import get_setting
from .errors import CatalogMismatch, EmptyLexicon, LexiconError

logger = logging.getLogger(__name__)

DEFAULT_BUCKETS = ('0', '1', '2', '3', '4+')
LEXICON_SECTIONS = ('keywords', 'type_keywords', 'param_buckets')

_BUCKET = re.compile(r'^(\d+)(\+?)$')
_TOKEN = re.compile(r'[A-Z]+(?=[A-Z][a-z]|[^A-Za-z]|$)|[A-Z]?[a-z]+|[A-Z]+|\d+')


class FeatureType(models.TextChoices):
    CLASS_NAME_STARTS = 'ClassNameStarts'
    CLASS_NAME_CONTAINS = 'ClassNameContains'
    CLASS_NAME_ENDS = 'ClassNameEnds'
    METHOD_NAME_STARTS = 'MethodNameStarts'
    METHOD_NAME_CONTAINS = 'MethodNameContains'
    METHOD_NAME_ENDS = 'MethodNameEnds'
    RETURNS_VOID = 'ReturnsVoid'
    RETURNS_PRIMITIVE = 'ReturnsPrimitive'
    RETURN_TYPE_CONTAINS = 'ReturnTypeContains'
    PARAM_COUNT_IS = 'ParamCountIs'
    HAS_PRIMITIVE_PARAM = 'HasPrimitiveParam'
    PARAM_TYPE_CONTAINS = 'ParamTypeContains'
    CALLEE_NAME_STARTS = 'CalleeNameStarts'
    CALLEE_NAME_CONTAINS = 'CalleeNameContains'
    CALLEE_NAME_ENDS = 'CalleeNameEnds'
    CALLEE_RETURN_TYPE_CONTAINS = 'CalleeReturnTypeContains'
    CALLEE_PARAM_TYPE_CONTAINS = 'CalleeParamTypeContains'
    FLOW_PARAM_TO_RETURN = 'FlowParamToReturn'
    FLOW_PARAM_TO_FIELD = 'FlowParamToField'
    FLOW_FIELD_TO_RETURN = 'FlowFieldToReturn'


# The method-characterizing criterion each feature type instantiates.
CRITERIA = {
    FeatureType.CLASS_NAME_STARTS: 'name starts with a keyword',
    FeatureType.METHOD_NAME_STARTS: 'name starts with a keyword',
    FeatureType.CLASS_NAME_CONTAINS: 'name contains a keyword',
    FeatureType.METHOD_NAME_CONTAINS: 'name contains a keyword',
    FeatureType.CLASS_NAME_ENDS: 'name ends with a keyword',
    FeatureType.METHOD_NAME_ENDS: 'name ends with a keyword',
    FeatureType.RETURNS_VOID: 'primitive return type',
    FeatureType.RETURNS_PRIMITIVE: 'primitive return type',
    FeatureType.RETURN_TYPE_CONTAINS: 'object return type',
    FeatureType.PARAM_COUNT_IS: 'number of parameters',
    FeatureType.HAS_PRIMITIVE_PARAM: 'parameter types',
    FeatureType.PARAM_TYPE_CONTAINS: 'parameter types',
    FeatureType.CALLEE_NAME_STARTS: 'callee name',
    FeatureType.CALLEE_NAME_CONTAINS: 'callee name',
    FeatureType.CALLEE_NAME_ENDS: 'callee name',
    FeatureType.CALLEE_RETURN_TYPE_CONTAINS: 'callee return type',
    FeatureType.CALLEE_PARAM_TYPE_CONTAINS: 'callee parameter types',
    FeatureType.FLOW_PARAM_TO_RETURN: 'parameter flows into return',
    FeatureType.FLOW_PARAM_TO_FIELD: 'parameter flows into field',
    FeatureType.FLOW_FIELD_TO_RETURN: 'field flows into return',
}

_KEYWORD_TYPES = frozenset({
    FeatureType.CLASS_NAME_STARTS, FeatureType.CLASS_NAME_CONTAINS, FeatureType.CLASS_NAME_ENDS,
    FeatureType.METHOD_NAME_STARTS, FeatureType.METHOD_NAME_CONTAINS, FeatureType.METHOD_NAME_ENDS,
    FeatureType.CALLEE_NAME_STARTS, FeatureType.CALLEE_NAME_CONTAINS, FeatureType.CALLEE_NAME_ENDS,
})
_TYPE_KEYWORD_TYPES = frozenset({
    FeatureType.RETURN_TYPE_CONTAINS, FeatureType.PARAM_TYPE_CONTAINS,
    FeatureType.CALLEE_RETURN_TYPE_CONTAINS, FeatureType.CALLEE_PARAM_TYPE_CONTAINS,
})
_PRIMITIVE_TYPES = frozenset({FeatureType.RETURNS_PRIMITIVE, FeatureType.HAS_PRIMITIVE_PARAM})


# ----------------------
# Lexicon
# ----------------------
def _bucket_bounds(bucket):
    match = _BUCKET.match(bucket)
    if match is None:
        raise LexiconError(f"bad parameter-count bucket {bucket!r}")
    return int(match.group(1)), bool(match.group(2))


def bucket_matches(bucket, count):
    low, open_ended = _bucket_bounds(bucket)
    return count >= low if open_ended else count == low


@dataclass(frozen=True)
class Lexicon:
    keywords: Tuple[str, ...]
    type_keywords: Tuple[str, ...] = ()
    param_buckets: Tuple[str, ...] = DEFAULT_BUCKETS
    primitive_names: Tuple[str, ...] = field(default=PRIMITIVE_NAMES, init=False)

    def __post_init__(self):
        object.__setattr__(self, 'keywords', tuple(self.keywords))
        object.__setattr__(self, 'type_keywords', tuple(self.type_keywords))
        object.__setattr__(self, 'param_buckets', tuple(self.param_buckets))
        if not self.keywords:
            raise EmptyLexicon("lexicon has no keywords")
        for keyword in self.keywords:
            if not keyword or keyword != keyword.lower() or not keyword.isalnum():
                raise LexiconError(f"keyword {keyword!r} must be a non-empty lowercase token")
        if len(set(self.keywords)) != len(self.keywords):
            raise LexiconError("duplicate keywords")
        lowered = [fragment.lower() for fragment in self.type_keywords]
        if any(not fragment for fragment in lowered) or len(set(lowered)) != len(lowered):
            raise LexiconError("type keywords must be non-empty and unique")
        if len(set(self.param_buckets)) != len(self.param_buckets):
            raise LexiconError("duplicate parameter-count buckets")
        for bucket in self.param_buckets:
            _bucket_bounds(bucket)

    def canonical(self):
        """The same vocabulary with every list in a fixed order."""
        return Lexicon(
            keywords=sorted(self.keywords),
            type_keywords=sorted(self.type_keywords, key=str.lower),
            param_buckets=sorted(self.param_buckets, key=_bucket_bounds),
        )


def parse_lexicon(text, source='<lexicon>'):
    sections = {}
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if line.startswith('[') and line.endswith(']'):
            current = line[1:-1].strip()
            if current not in LEXICON_SECTIONS:
                raise LexiconError(f"{source}:{number}: unknown section [{current}]")
            sections.setdefault(current, [])
            continue
        if current is None:
            raise LexiconError(f"{source}:{number}: token outside of a section")
        sections[current].append(line)
    return Lexicon(
        keywords=sections.get('keywords', ()),
        type_keywords=sections.get('type_keywords', ()),
        param_buckets=sections.get('param_buckets') or DEFAULT_BUCKETS,
    )


def load_lexicon(path=None):
    path = Path(path or get_setting('DEFAULT_LEXICON'))
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise LexiconError(f"cannot read lexicon {path}: {exc}") from exc
    return parse_lexicon(text, source=str(path))


# ----------------------
# Catalog
# ----------------------
@dataclass(frozen=True)
class FeatureInstance:
    id: int
    feature_type: FeatureType
    argument: object = None

    @property
    def name(self):
        suffix = '' if self.argument is None else f"({self.argument})"
        return f"{self.feature_type.value}{suffix}"

    def as_dict(self):
        return {'id': self.id, 'feature_type': self.feature_type.value, 'argument': self.argument}


def _arguments(feature_type, lexicon):
    if feature_type in _KEYWORD_TYPES:
        return lexicon.keywords
    if feature_type in _TYPE_KEYWORD_TYPES:
        return lexicon.type_keywords
    if feature_type in _PRIMITIVE_TYPES:
        return lexicon.primitive_names
    if feature_type == FeatureType.PARAM_COUNT_IS:
        return lexicon.param_buckets
    return (None,)


class Catalog:
    """Ordered, immutable list of feature instances identified by a content hash."""

    def __init__(self, instances, receiver_flows=True):
        self.instances = tuple(instances)
        self.receiver_flows = receiver_flows
        self._groups = {}
        for instance in self.instances:
            self._groups.setdefault(instance.feature_type, {})[instance.argument] = instance.id
        payload = json.dumps(
            {
                'receiver_flows': receiver_flows,
                'features': [[i.feature_type.value, i.argument] for i in self.instances],
            },
            sort_keys=True,
            separators=(',', ':'),
        )
        self.catalog_id = hashlib.sha256(payload.encode('utf-8')).hexdigest()

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __getitem__(self, index):
        return self.instances[index]

    def groups(self):
        return self._groups.items()

    def find(self, feature_type, argument=None):
        feature_id = self._groups.get(FeatureType(feature_type), {}).get(argument)
        return None if feature_id is None else self.instances[feature_id]

    def to_json(self):
        return json.dumps([i.as_dict() for i in self.instances], indent=2) + '\n'

    def check(self, catalog_id):
        if catalog_id != self.catalog_id:
            raise CatalogMismatch(self.catalog_id, catalog_id)


def build_catalog(lexicon, receiver_flows=None):
    if receiver_flows is None:
        receiver_flows = get_setting('RECEIVER_FLOWS')
    instances = []
    for feature_type in FeatureType:
        for argument in _arguments(feature_type, lexicon):
            instances.append(FeatureInstance(len(instances), feature_type, argument))
    return Catalog(instances, receiver_flows=receiver_flows)


# ----------------------
# Method surface
# ----------------------
def name_tokens(name):
    """Split a camelCase (or snake_case, or ``Outer$Inner``) name into lowercase tokens."""
    return [token.lower() for token in _TOKEN.findall(name)]


def _affixes(tokens):
    prefixes = frozenset(''.join(tokens[:j]) for j in range(1, len(tokens) + 1))
    suffixes = frozenset(''.join(tokens[j:]) for j in range(len(tokens)))
    return prefixes, suffixes


def type_simple_name(value_type):
    """Lowercased simple name of a type, looking through array dimensions."""
    if isinstance(value_type, ArrayType):
        value_type = value_type.element
    return value_type.simple_name.lower()


@dataclass(frozen=True)
class _CalleeSurface:
    name: str
    prefixes: frozenset
    suffixes: frozenset
    return_type: str
    param_types: Tuple[str, ...]


class MethodSurface:
    """Everything the catalog predicates look at, computed once per method."""

    def __init__(self, method, flows, receiver_flows=True):
        class_simple = method.owner.rsplit('.', 1)[-1]
        self.class_name = method.owner.lower()
        self.class_prefixes, self.class_suffixes = _affixes(name_tokens(class_simple))
        self.method_name = method.name.lower()
        self.method_prefixes, self.method_suffixes = _affixes(name_tokens(method.name))

        descriptor = method.descriptor
        return_type = descriptor.return_type
        self.returns_void = isinstance(return_type, VoidType)
        self.return_primitive = return_type.name if isinstance(return_type, PrimitiveType) else None
        self.return_type = type_simple_name(return_type)
        self.param_count = len(descriptor.param_types)
        self.param_primitives = frozenset(
            t.name for t in descriptor.param_types if isinstance(t, PrimitiveType))
        self.param_types = tuple(type_simple_name(t) for t in descriptor.param_types)

        callees = {}
        for invoke in method.invocations():
            key = (invoke.callee_name, invoke.callee_descriptor)
            if key not in callees:
                prefixes, suffixes = _affixes(name_tokens(invoke.callee_name))
                callees[key] = _CalleeSurface(
                    invoke.callee_name.lower(), prefixes, suffixes,
                    type_simple_name(invoke.callee_descriptor.return_type),
                    tuple(type_simple_name(t) for t in invoke.callee_descriptor.param_types),
                )
        self.callees = tuple(callees.values())

        if not receiver_flows and not method.is_static:
            flows = flows.without_receiver()
        self.flow_param_to_return = bool(flows.params_to_return)
        self.flow_param_to_field = bool(flows.params_to_field)
        self.flow_field_to_return = bool(flows.fields_to_return)


def _contains(text, candidates):
    return [k for k in candidates if k.lower() in text]


def _any_contains(texts, candidates):
    return [k for k in candidates if any(k.lower() in text for text in texts)]


def _affix_hits(affixes, candidates):
    return [k for k in affixes if k in candidates]


def _callee_affix_hits(surface, candidates, attribute):
    hits = set()
    for callee in surface.callees:
        hits.update(k for k in getattr(callee, attribute) if k in candidates)
    return hits


def _when(flag):
    return [None] if flag else []


# Each matcher returns the subset of ``candidates`` (feature arguments) that
# hold for the method.
MATCHERS = {
    FeatureType.CLASS_NAME_STARTS: lambda s, c: _affix_hits(s.class_prefixes, c),
    FeatureType.CLASS_NAME_CONTAINS: lambda s, c: _contains(s.class_name, c),
    FeatureType.CLASS_NAME_ENDS: lambda s, c: _affix_hits(s.class_suffixes, c),
    FeatureType.METHOD_NAME_STARTS: lambda s, c: _affix_hits(s.method_prefixes, c),
    FeatureType.METHOD_NAME_CONTAINS: lambda s, c: _contains(s.method_name, c),
    FeatureType.METHOD_NAME_ENDS: lambda s, c: _affix_hits(s.method_suffixes, c),
    FeatureType.RETURNS_VOID: lambda s, c: _when(s.returns_void),
    FeatureType.RETURNS_PRIMITIVE: lambda s, c: [s.return_primitive] if s.return_primitive in c else [],
    FeatureType.RETURN_TYPE_CONTAINS: lambda s, c: _contains(s.return_type, c),
    FeatureType.PARAM_COUNT_IS: lambda s, c: [b for b in c if bucket_matches(b, s.param_count)],
    FeatureType.HAS_PRIMITIVE_PARAM: lambda s, c: [p for p in s.param_primitives if p in c],
    FeatureType.PARAM_TYPE_CONTAINS: lambda s, c: _any_contains(s.param_types, c),
    FeatureType.CALLEE_NAME_STARTS: lambda s, c: _callee_affix_hits(s, c, 'prefixes'),
    FeatureType.CALLEE_NAME_CONTAINS: lambda s, c: _any_contains([x.name for x in s.callees], c),
    FeatureType.CALLEE_NAME_ENDS: lambda s, c: _callee_affix_hits(s, c, 'suffixes'),
    FeatureType.CALLEE_RETURN_TYPE_CONTAINS: lambda s, c: _any_contains([x.return_type for x in s.callees], c),
    FeatureType.CALLEE_PARAM_TYPE_CONTAINS: lambda s, c: _any_contains(
        [t for x in s.callees for t in x.param_types], c),
    FeatureType.FLOW_PARAM_TO_RETURN: lambda s, c: _when(s.flow_param_to_return),
    FeatureType.FLOW_PARAM_TO_FIELD: lambda s, c: _when(s.flow_param_to_field),
    FeatureType.FLOW_FIELD_TO_RETURN: lambda s, c: _when(s.flow_field_to_return),
}


def evaluate(instance, method, flows, receiver_flows=True):
    surface = MethodSurface(method, flows, receiver_flows)
    return instance.argument in MATCHERS[instance.feature_type](surface, {instance.argument: instance.id})


# ----------------------
# Vectors
# ----------------------
class FeatureVector:
    """Read-only bit vector tagged with the id of the catalog that produced it."""

    __slots__ = ('catalog_id', 'bits')

    def __init__(self, catalog_id, bits):
        bits = np.array(bits, dtype=np.uint8)
        bits.setflags(write=False)
        self.catalog_id = catalog_id
        self.bits = bits

    def __len__(self):
        return len(self.bits)

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.catalog_id == other.catalog_id and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.catalog_id, self.bits.tobytes()))

    def __repr__(self):
        return f"FeatureVector({self.catalog_id[:12]}, {int(self.bits.sum())}/{len(self.bits)} set)"

    def active(self):
        return [int(i) for i in np.flatnonzero(self.bits)]


def vectorize(method, flows, catalog):
    surface = MethodSurface(method, flows, catalog.receiver_flows)
    bits = np.zeros(len(catalog), dtype=np.uint8)
    for feature_type, by_argument in catalog.groups():
        for argument in MATCHERS[feature_type](surface, by_argument):
            bits[by_argument[argument]] = 1
    return FeatureVector(catalog.catalog_id, bits)
