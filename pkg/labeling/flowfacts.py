"""
Intra-procedural dataflow facts.

Every operand-stack entry and local slot holds the set of origins its
value may derive from: a parameter position, a field, or OTHER. States
are merged by set union at control-flow joins and iterated to a fixed
point, then read off at value returns and field stores:

    params_to_return   parameter i reaches a value-returning return
    params_to_field    parameter i reaches a store into field f
    fields_to_return   field f reaches a value-returning return

Parameter positions count the receiver of instance methods as 0.
"""

from dataclasses import dataclass
import logging
from typing import FrozenSet, Optional, Tuple

from .classfile.model import (
    Branch,
    Const,
    FieldGet,
    FieldId,
    FieldPut,
    Invoke,
    Load,
    Other,
    Return,
    StackOp,
    Store,
    Throw,
)
from .errors import FlowAnalysisError, InconsistentStackDepth, StackUnderflow

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Origin:
    tag: str
    index: Optional[int] = None
    field: Optional[FieldId] = None

    @classmethod
    def param(cls, index):
        return cls('param', index=index)

    @classmethod
    def of_field(cls, field):
        return cls('field', field=field)


OTHER = Origin('other')
ONLY_OTHER = frozenset((OTHER,))


@dataclass(frozen=True)
class FlowFacts:
    params_to_return: FrozenSet[int] = frozenset()
    params_to_field: FrozenSet[Tuple[int, FieldId]] = frozenset()
    fields_to_return: FrozenSet[FieldId] = frozenset()

    @property
    def is_empty(self):
        return not (self.params_to_return or self.params_to_field or self.fields_to_return)

    def without_receiver(self):
        return FlowFacts(
            frozenset(i for i in self.params_to_return if i != 0),
            frozenset(pair for pair in self.params_to_field if pair[0] != 0),
            self.fields_to_return,
        )


EMPTY_FACTS = FlowFacts()


class _FactCollector:
    def __init__(self):
        self.params_to_return = set()
        self.params_to_field = set()
        self.fields_to_return = set()

    def returned(self, origins):
        for origin in origins:
            if origin.tag == 'param':
                self.params_to_return.add(origin.index)
            elif origin.tag == 'field':
                self.fields_to_return.add(origin.field)

    def stored(self, origins, field):
        for origin in origins:
            if origin.tag == 'param':
                self.params_to_field.add((origin.index, field))

    def freeze(self):
        return FlowFacts(
            frozenset(self.params_to_return),
            frozenset(self.params_to_field),
            frozenset(self.fields_to_return),
        )


# A state is (locals, stack): locals is a tuple of origin sets (None for
# an unassigned slot), stack a tuple of (origins, is_wide) pairs.


def _union(values):
    result = set()
    for origins, _wide in values:
        result |= origins
    return frozenset(result)


class _Frame:
    """Mutable working copy of one state while an instruction executes."""

    def __init__(self, state, offset):
        self.locals = list(state[0])
        self.stack = list(state[1])
        self.offset = offset

    def pop(self):
        if not self.stack:
            raise StackUnderflow("pop from empty operand stack", self.offset)
        return self.stack.pop()

    def pop_values(self, count):
        values = [self.pop() for _ in range(count)]
        values.reverse()
        return values

    def pop_words(self, words):
        """Pop values covering exactly ``words`` stack words, bottom first."""
        values = []
        taken = 0
        while taken < words:
            value = self.pop()
            taken += 2 if value[1] else 1
            values.append(value)
        if taken != words:
            raise InconsistentStackDepth("stack operation splits a two-word value", self.offset)
        values.reverse()
        return values

    def push(self, origins, wide=False):
        self.stack.append((origins, wide))

    def freeze(self):
        return tuple(self.locals), tuple(self.stack)


def _stack_op(frame, effect):
    if effect == 'pop':
        frame.pop_words(1)
    elif effect == 'pop2':
        frame.pop_words(2)
    elif effect == 'swap':
        top = frame.pop_words(1)
        below = frame.pop_words(1)
        frame.stack.extend(top + below)
    else:
        top_words = 2 if effect.startswith('dup2') else 1
        below_words = {'': 0, '_x1': 1, '_x2': 2}[effect[len('dup2' if top_words == 2 else 'dup'):]]
        top = frame.pop_words(top_words)
        below = frame.pop_words(below_words) if below_words else []
        frame.stack.extend(top + below + top)


class MethodFlow:
    """Control-flow and transfer functions of one method's instruction stream."""

    def __init__(self, method):
        self.method = method
        self.instructions = method.instructions
        self.index_of = {insn.offset: i for i, insn in enumerate(self.instructions)}
        self.slot_count = self._slot_count()

    def _slot_count(self):
        top = self.method.descriptor.slot_count + (0 if self.method.is_static else 1)
        for insn in self.instructions:
            if isinstance(insn.kind, (Load, Store)):
                top = max(top, insn.kind.slot + 2)
        return top

    def initial_state(self):
        slots = [None] * self.slot_count
        position = 0
        slot = 0
        if not self.method.is_static:
            slots[0] = frozenset((Origin.param(0),))
            position = slot = 1
        for param_type in self.method.descriptor.param_types:
            slots[slot] = frozenset((Origin.param(position),))
            if param_type.is_wide:
                slots[slot + 1] = ONLY_OTHER
                slot += 1
            slot += 1
            position += 1
        return tuple(slots), ()

    def successors(self, index):
        kind = self.instructions[index].kind
        following = [index + 1] if index + 1 < len(self.instructions) else []
        if isinstance(kind, Branch):
            targets = [self.index_of[t] for t in kind.target_offsets]
            return targets + following if kind.falls_through else targets
        if isinstance(kind, (Return, Throw)):
            return []
        return following

    def handlers_covering(self, index):
        offset = self.instructions[index].offset
        return [self.index_of[h.handler] for h in self.method.handlers if h.start <= offset < h.end]

    def step(self, index, state, facts=None):
        """Apply instruction ``index`` to ``state``; record facts when a collector is given."""
        insn = self.instructions[index]
        kind = insn.kind
        frame = _Frame(state, insn.offset)

        if isinstance(kind, Load):
            origins = frame.locals[kind.slot] if kind.slot < len(frame.locals) else None
            frame.push(origins if origins is not None else ONLY_OTHER, kind.wide)
        elif isinstance(kind, Store):
            origins, _wide = frame.pop()
            frame.locals[kind.slot] = origins
            if kind.wide and kind.slot + 1 < len(frame.locals):
                frame.locals[kind.slot + 1] = ONLY_OTHER
        elif isinstance(kind, Const):
            frame.push(ONLY_OTHER, kind.wide)
        elif isinstance(kind, Invoke):
            descriptor = kind.callee_descriptor
            consumed = frame.pop_values(len(descriptor.param_types) + (1 if kind.has_receiver else 0))
            if not descriptor.returns_void:
                frame.push(_union(consumed) | ONLY_OTHER, descriptor.return_type.is_wide)
        elif isinstance(kind, FieldGet):
            if not kind.is_static:
                frame.pop()
            frame.push(frozenset((Origin.of_field(kind.field), OTHER)), kind.field_type.is_wide)
        elif isinstance(kind, FieldPut):
            origins, _wide = frame.pop()
            if not kind.is_static:
                frame.pop()
            if facts is not None:
                facts.stored(origins, kind.field)
        elif isinstance(kind, Return):
            if kind.has_value:
                origins, _wide = frame.pop()
                if facts is not None:
                    facts.returned(origins)
        elif isinstance(kind, Branch):
            frame.pop_values(kind.pop_count)
            if kind.pushes_return_address:
                frame.push(ONLY_OTHER)
        elif isinstance(kind, StackOp):
            _stack_op(frame, kind.effect)
        elif isinstance(kind, Throw):
            frame.pop()
        elif isinstance(kind, Other):
            consumed = frame.pop_values(kind.pop_count)
            for _ in range(kind.push_count):
                frame.push(_union(consumed) | ONLY_OTHER, kind.wide)
        return frame.freeze()


def _merge(old, new, offset):
    if old is None:
        return new
    old_locals, old_stack = old
    new_locals, new_stack = new
    if len(old_stack) != len(new_stack) or any(a[1] != b[1] for a, b in zip(old_stack, new_stack)):
        raise InconsistentStackDepth(
            f"stack shapes {len(old_stack)} and {len(new_stack)} meet", offset)
    merged_locals = tuple(
        b if a is None else a if b is None else a | b
        for a, b in zip(old_locals, new_locals)
    )
    merged_stack = tuple((a[0] | b[0], a[1]) for a, b in zip(old_stack, new_stack))
    return merged_locals, merged_stack


def solve(method):
    """Return the fixed-point entry state of every reachable instruction index."""
    flow = MethodFlow(method)
    states = {0: flow.initial_state()}
    worklist = [0]
    queued = {0}

    def propagate(target, state):
        offset = flow.instructions[target].offset
        merged = _merge(states.get(target), state, offset)
        if merged != states.get(target):
            states[target] = merged
            if target not in queued:
                queued.add(target)
                worklist.append(target)

    while worklist:
        index = worklist.pop()
        queued.discard(index)
        state = states[index]
        out = flow.step(index, state)
        for target in flow.successors(index):
            propagate(target, out)
        for handler in flow.handlers_covering(index):
            for locals_ in (state[0], out[0]):
                propagate(handler, (locals_, ((ONLY_OTHER, False),)))
    return flow, states


def analyze_flows(method):
    """Compute FlowFacts for ``method``; raise FlowAnalysisError on malformed bytecode."""
    if not method.instructions:
        return EMPTY_FACTS
    flow, states = solve(method)
    facts = _FactCollector()
    for index, state in states.items():
        flow.step(index, state, facts)
    return facts.freeze()


def analyze_flows_or_empty(method):
    """Like analyze_flows, but degrade to empty facts (with a warning) on malformed bytecode."""
    try:
        return analyze_flows(method), None
    except FlowAnalysisError as exc:
        message = f"{method.qualified_name}{method.descriptor.render()}: {exc}"
        logger.warning("flow analysis skipped for %s", message)
        return EMPTY_FACTS, message
