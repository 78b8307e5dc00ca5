"""Worklist abstract interpretation over EVM bytecode.

Paths are explored from offset 0 following statically known jump targets.
Each JUMPDEST may be entered a bounded number of times per run; beyond that
the incoming state is joined with the previous one (differing stack cells
become opaque) so loops converge. A global step budget guarantees
termination on arbitrary input.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

from ..evm.disasm import Program
from ..evm.types import WORD_MASK, Selector, keccak256
from .values import (
    CALLDATA,
    CALLER,
    SELF,
    AbstractValue,
    Predicate,
    Tag,
    const,
    opaque,
)

DEFAULT_BUDGET = 50_000
DEFAULT_MAX_VISITS = 4
_MAX_CONDITIONS = 32
_MAX_WRITES = 48
_MAX_STACK = 1024
_SIGN_BIT = 1 << 255


class Entry(enum.Enum):
    DISPATCH = "dispatch"
    FALLBACK = "fallback"


class MalformedJumpTable(Exception):
    """No jump reachable from the entry resolved to a valid JUMPDEST."""


@dataclass(frozen=True, slots=True)
class Condition:
    """On this path, ``left == right`` evaluated to ``equal`` at the JUMPI at ``offset``."""

    left: AbstractValue
    right: AbstractValue
    equal: bool
    offset: int

    def other_side(self, tag: Tag) -> AbstractValue | None:
        if self.left.tag is tag:
            return self.right
        if self.right.tag is tag:
            return self.left
        return None


@dataclass(frozen=True, slots=True)
class Event:
    kind: str
    offset: int
    operands: tuple[AbstractValue, ...]
    # Function selector the path dispatched to; None on the fallback path.
    selector: Selector | None
    conditions: tuple[Condition, ...]
    # RETURN: first returned word. Calls: selector of the outgoing calldata.
    data: AbstractValue | None = None
    input_selector: Selector | None = None


@dataclass(frozen=True, slots=True)
class _Write:
    offset: int
    size: int | None  # None: extends to the end of memory
    value: AbstractValue
    data: bytes | None = None

    def covers(self, lo: int, hi: int) -> bool:
        return self.offset <= lo and (self.size is None or hi <= self.offset + self.size)

    def overlaps(self, lo: int, hi: int) -> bool:
        return self.offset < hi and (self.size is None or lo < self.offset + self.size)


@dataclass(frozen=True, slots=True)
class Memory:
    writes: tuple[_Write, ...] = ()
    # Set once a write lands at an unknown offset; unwritten bytes stop being zero.
    clobbered: bool = False
    taint: bool = False

    def write(self, w: _Write) -> Memory:
        if w.size is None:
            kept = tuple(x for x in self.writes if x.offset < w.offset)
        else:
            kept = tuple(
                x for x in self.writes if x.size is None or not w.covers(x.offset, x.offset + x.size)
            )
        writes = kept + (w,)
        clobbered, taint = self.clobbered, self.taint
        if len(writes) > _MAX_WRITES:
            dropped = writes[: len(writes) - _MAX_WRITES]
            writes = writes[len(writes) - _MAX_WRITES :]
            clobbered = True
            taint = taint or any(x.value.taint for x in dropped)
        return Memory(writes, clobbered, taint)

    def clobber(self, taint: bool) -> Memory:
        return Memory(self.writes, True, self.taint or taint)

    def _byte(self, pos: int) -> int | None:
        for w in reversed(self.writes):
            if w.overlaps(pos, pos + 1):
                if w.data is not None:
                    i = pos - w.offset
                    return w.data[i] if i < len(w.data) else 0
                return None
        return None if self.clobbered else 0

    def read_bytes(self, offset: int, size: int) -> bytes | None:
        out = bytearray()
        for pos in range(offset, offset + size):
            b = self._byte(pos)
            if b is None:
                return None
            out.append(b)
        return bytes(out)

    def _taint_in(self, lo: int, hi: int) -> bool:
        if self.clobbered and self.taint:
            return True
        return any(w.value.taint for w in self.writes if w.overlaps(lo, hi))

    def load(self, offset: int) -> AbstractValue:
        hi = offset + 32
        for w in reversed(self.writes):
            if w.overlaps(offset, hi):
                if w.data is None and w.covers(offset, hi):
                    if w.offset == offset:
                        return w.value
                    if w.value.tag is Tag.CALLDATA:
                        return CALLDATA
                    return w.value
                if w.offset == offset and w.size == 32 and w.value.tag is Tag.CONST:
                    return w.value
                break
        data = self.read_bytes(offset, 32)
        if data is not None:
            return const(int.from_bytes(data, "big"))
        return opaque(self._taint_in(offset, hi))

    def hash(self, offset: int, size: int) -> AbstractValue:
        data = self.read_bytes(offset, size)
        if data is not None:
            return const(int.from_bytes(keccak256(data), "big"), preimage=data)
        return opaque(self._taint_in(offset, offset + size))


@dataclass(frozen=True, slots=True)
class _State:
    pc: int
    stack: tuple[AbstractValue, ...]
    mem: Memory
    conds: tuple[Condition, ...]
    selector: Selector | None
    last_ret: AbstractValue | None


@dataclass(frozen=True)
class Interpretation:
    entry: Entry
    events: tuple[Event, ...]
    steps: int
    truncated: bool
    unresolved_jumps: frozenset[int]
    error: MalformedJumpTable | None = None

    def of_kind(self, *kinds: str) -> list[Event]:
        return [e for e in self.events if e.kind in kinds]


def _signed(x: int) -> int:
    return x - (1 << 256) if x & _SIGN_BIT else x


def _fold(name: str, a: int, b: int) -> int:
    if name == "ADD":
        return (a + b) & WORD_MASK
    if name == "MUL":
        return (a * b) & WORD_MASK
    if name == "SUB":
        return (a - b) & WORD_MASK
    if name == "DIV":
        return 0 if b == 0 else a // b
    if name == "SDIV":
        if b == 0:
            return 0
        sa, sb = _signed(a), _signed(b)
        q = abs(sa) // abs(sb)
        return (-q if (sa < 0) != (sb < 0) else q) & WORD_MASK
    if name == "MOD":
        return 0 if b == 0 else a % b
    if name == "SMOD":
        if b == 0:
            return 0
        sa, sb = _signed(a), _signed(b)
        r = abs(sa) % abs(sb)
        return (-r if sa < 0 else r) & WORD_MASK
    if name == "EXP":
        return pow(a, b, 1 << 256)
    if name == "SIGNEXTEND":
        if a >= 31:
            return b
        bit = 8 * a + 7
        mask = (1 << bit) - 1
        return (b | ~mask) & WORD_MASK if b & (1 << bit) else b & mask
    if name == "LT":
        return int(a < b)
    if name == "GT":
        return int(a > b)
    if name == "SLT":
        return int(_signed(a) < _signed(b))
    if name == "SGT":
        return int(_signed(a) > _signed(b))
    if name == "EQ":
        return int(a == b)
    if name == "AND":
        return a & b
    if name == "OR":
        return a | b
    if name == "XOR":
        return a ^ b
    if name == "BYTE":
        return 0 if a >= 32 else (b >> (8 * (31 - a))) & 0xFF
    if name == "SHL":
        return 0 if a >= 256 else (b << a) & WORD_MASK
    if name == "SHR":
        return 0 if a >= 256 else b >> a
    if name == "SAR":
        sb = _signed(b)
        return (sb >> min(a, 256)) & WORD_MASK
    raise AssertionError(name)


def _is_low_mask(x: int) -> bool:
    return x != 0 and (x & (x + 1)) == 0


_SELECTOR_SHIFT = 224
_HIGH4 = 0xFFFFFFFF << _SELECTOR_SHIFT


def _binary(name: str, a: AbstractValue, b: AbstractValue) -> AbstractValue:
    """``a`` is the top of stack (first operand in EVM order)."""
    if a.is_const and b.is_const:
        return const(_fold(name, a.word, b.word))
    taint = a.taint or b.taint
    if name == "EQ":
        return AbstractValue(Tag.OPAQUE, taint=taint, pred=Predicate(a, b))
    if name in ("SUB", "XOR"):
        if b.is_const and b.word == 0:
            return a
        return AbstractValue(Tag.OPAQUE, taint=taint, pred=Predicate(a, b, negated=True))
    if name == "AND":
        c, v = (a, b) if a.is_const else (b, a) if b.is_const else (None, None)
        if c is not None:
            if _is_low_mask(c.word):
                if v.calldata_role == "raw" and c.word == 0xFFFFFFFF:
                    return opaque(True)
                return v
            if c.word == _HIGH4 and v.calldata_role == "raw":
                return v
        return opaque(taint)
    if name in ("OR", "ADD"):
        if a.is_const and a.word == 0:
            return b
        if b.is_const and b.word == 0:
            return a
        return opaque(taint)
    if name == "MUL":
        if a.is_const and a.word == 1:
            return b
        if b.is_const and b.word == 1:
            return a
        return opaque(taint)
    if name == "DIV":
        if b.is_const:
            if b.word == 1:
                return a
            if b.word == 1 << _SELECTOR_SHIFT and a.calldata_role == "raw":
                return AbstractValue(Tag.CALLDATA, taint=True, calldata_role="selector")
        return opaque(taint)
    if name in ("SHR", "SHL"):
        if a.is_const:
            if a.word == 0:
                return b
            if name == "SHR" and a.word == _SELECTOR_SHIFT and b.calldata_role == "raw":
                return AbstractValue(Tag.CALLDATA, taint=True, calldata_role="selector")
        return opaque(taint)
    return opaque(taint)


def _selector_test(pred: Predicate) -> Selector | None:
    """If ``pred`` compares the dispatch selector with a constant, that constant."""
    for sel, c in ((pred.left, pred.right), (pred.right, pred.left)):
        if not c.is_const:
            continue
        if sel.calldata_role == "selector" and c.word <= 0xFFFFFFFF:
            return Selector(c.word)
        if sel.calldata_role == "raw" and c.word & ~_HIGH4 == 0:
            return Selector(c.word >> _SELECTOR_SHIFT)
    return None


class _Run:
    def __init__(self, program: Program, entry: Entry, budget: int, max_visits: int):
        self.p = program
        self.entry = entry
        self.budget = budget
        self.max_visits = max_visits
        self.steps = 0
        self.truncated = False
        self.events: dict[Event, None] = {}
        self.unresolved: set[int] = set()
        self.jumps_seen = 0
        self.jumps_resolved = 0
        self.seen: set[_State] = set()
        self.visits: dict[int, int] = {}
        self.last_at: dict[int, _State] = {}
        self.work: list[_State] = []

    def emit(self, kind, pc, operands, st_sel, conds, data=None, input_selector=None):
        self.events.setdefault(Event(kind, pc, tuple(operands), st_sel, conds, data, input_selector))

    def push_state(self, st: _State, counted: bool) -> None:
        if st in self.seen:
            return
        if counted:
            n = self.visits.get(st.pc, 0) + 1
            self.visits[st.pc] = n
            if n > self.max_visits * 4:
                self.truncated = True
                return
            if n > self.max_visits:
                st = self._widen(self.last_at[st.pc], st)
                if st in self.seen:
                    return
            self.last_at[st.pc] = st
        self.seen.add(st)
        self.work.append(st)

    @staticmethod
    def _widen(prev: _State, cur: _State) -> _State:
        if len(prev.stack) == len(cur.stack):
            stack = tuple(
                a if a == b else opaque(a.taint or b.taint) for a, b in zip(prev.stack, cur.stack)
            )
        else:
            stack = tuple(opaque(v.taint) for v in cur.stack)
        mem = cur.mem
        if prev.mem != cur.mem:
            taint = prev.mem.taint or cur.mem.taint or any(
                w.value.taint for w in prev.mem.writes + cur.mem.writes
            )
            mem = Memory((), True, taint)
        n = 0
        while n < min(len(prev.conds), len(cur.conds)) and prev.conds[n] == cur.conds[n]:
            n += 1
        last = cur.last_ret if cur.last_ret == prev.last_ret else None
        return _State(cur.pc, stack, mem, cur.conds[:n], cur.selector, last)

    def run(self) -> None:
        self.push_state(_State(0, (), Memory(), (), None, None), counted=False)
        while self.work:
            if self.steps >= self.budget:
                self.truncated = True
                break
            self.block(self.work.pop())

    def block(self, st: _State) -> None:
        p = self.p
        code_len = len(p.code)
        pc = st.pc
        stack = list(st.stack)
        mem = st.mem
        conds = st.conds
        sel = st.selector
        last_ret = st.last_ret

        def pop(n: int) -> list[AbstractValue] | None:
            if len(stack) < n:
                return None
            out = stack[-n:][::-1] if n else []
            del stack[len(stack) - n :]
            return out

        while True:
            if self.steps >= self.budget:
                self.truncated = True
                return
            ins = p.at(pc)
            if ins is None:
                return  # ran off the end: implicit STOP
            self.steps += 1
            name = ins.name
            nxt = pc + ins.size

            if name.startswith("PUSH"):
                stack.append(const(ins.value))
            elif name.startswith("DUP"):
                n = int(name[3:])
                if len(stack) < n:
                    return
                stack.append(stack[-n])
            elif name.startswith("SWAP"):
                n = int(name[4:])
                if len(stack) < n + 1:
                    return
                stack[-1], stack[-n - 1] = stack[-n - 1], stack[-1]
            elif name == "POP":
                if pop(1) is None:
                    return
            elif name == "JUMPDEST":
                pass
            elif name in ("ADD", "MUL", "SUB", "DIV", "SDIV", "MOD", "SMOD", "EXP", "SIGNEXTEND",
                          "LT", "GT", "SLT", "SGT", "EQ", "AND", "OR", "XOR", "BYTE", "SHL", "SHR", "SAR"):
                args = pop(2)
                if args is None:
                    return
                stack.append(_binary(name, args[0], args[1]))
            elif name in ("ADDMOD", "MULMOD"):
                args = pop(3)
                if args is None:
                    return
                if all(a.is_const for a in args):
                    a, b, n = (x.word for x in args)
                    r = 0 if n == 0 else ((a + b) % n if name == "ADDMOD" else (a * b) % n)
                    stack.append(const(r))
                else:
                    stack.append(opaque(any(a.taint for a in args)))
            elif name == "ISZERO":
                args = pop(1)
                if args is None:
                    return
                v = args[0]
                if v.is_const:
                    stack.append(const(int(v.word == 0)))
                elif v.pred is not None:
                    stack.append(AbstractValue(Tag.OPAQUE, taint=v.taint, pred=v.pred.flip()))
                else:
                    stack.append(AbstractValue(Tag.OPAQUE, taint=v.taint, pred=Predicate(v, const(0))))
            elif name == "NOT":
                args = pop(1)
                if args is None:
                    return
                v = args[0]
                stack.append(const(~v.word & WORD_MASK) if v.is_const else opaque(v.taint))
            elif name == "SHA3":
                args = pop(2)
                if args is None:
                    return
                off, size = args
                if off.is_const and size.is_const and size.word <= 4096:
                    stack.append(mem.hash(off.word, size.word))
                else:
                    stack.append(opaque(off.taint or size.taint or mem.taint or any(w.value.taint for w in mem.writes)))
            elif name == "ADDRESS":
                stack.append(SELF)
            elif name == "CALLER":
                stack.append(CALLER)
            elif name == "CALLDATALOAD":
                args = pop(1)
                if args is None:
                    return
                off = args[0]
                if off.is_const and off.word == 0:
                    stack.append(AbstractValue(Tag.CALLDATA, taint=True, calldata_role="raw"))
                else:
                    stack.append(CALLDATA)
            elif name == "CALLDATASIZE":
                stack.append(opaque(True))
            elif name == "CODESIZE":
                stack.append(const(code_len))
            elif name == "PC":
                stack.append(const(pc))
            elif name in ("CALLDATACOPY", "CODECOPY", "RETURNDATACOPY"):
                args = pop(3)
                if args is None:
                    return
                dest, src, size = args
                if name == "CALLDATACOPY":
                    value = CALLDATA
                elif name == "RETURNDATACOPY":
                    value = last_ret if last_ret is not None else opaque()
                else:
                    value = opaque()
                if not dest.is_const:
                    mem = mem.clobber(value.taint)
                elif name == "CODECOPY" and src.is_const and size.is_const and size.word <= 0x10000:
                    data = p.code[src.word : src.word + size.word].ljust(size.word, b"\x00")
                    mem = mem.write(_Write(dest.word, size.word, opaque(), data))
                else:
                    sz = size.word if size.is_const and size.word <= 0x10000 else None
                    if sz != 0:
                        mem = mem.write(_Write(dest.word, sz, value))
            elif name == "EXTCODECOPY":
                args = pop(4)
                if args is None:
                    return
                mem = mem.clobber(False)
            elif name == "MLOAD":
                args = pop(1)
                if args is None:
                    return
                off = args[0]
                stack.append(mem.load(off.word) if off.is_const and off.word < 1 << 32 else opaque(mem.taint or off.taint))
            elif name in ("MSTORE", "MSTORE8"):
                args = pop(2)
                if args is None:
                    return
                off, v = args
                if not off.is_const or off.word >= 1 << 32:
                    mem = mem.clobber(v.taint)
                elif name == "MSTORE":
                    data = v.word.to_bytes(32, "big") if v.is_const else None
                    mem = mem.write(_Write(off.word, 32, v, data))
                else:
                    data = bytes([v.word & 0xFF]) if v.is_const else None
                    mem = mem.write(_Write(off.word, 1, v if not v.is_const else const(v.word & 0xFF), data))
            elif name == "SLOAD":
                args = pop(1)
                if args is None:
                    return
                slot = args[0]
                self.emit("SLOAD", pc, args, sel, conds)
                stack.append(AbstractValue(Tag.STORAGE, slot=slot.as_slot(), site=pc, taint=slot.taint))
            elif name == "SSTORE":
                args = pop(2)
                if args is None:
                    return
                self.emit("SSTORE", pc, args, sel, conds)
            elif name in ("CALL", "CALLCODE", "DELEGATECALL", "STATICCALL"):
                n = 7 if name in ("CALL", "CALLCODE") else 6
                args = pop(n)
                if args is None:
                    return
                addr = args[1]
                in_off, in_size, out_off, out_size = args[n - 4 :]
                input_selector = None
                if in_off.is_const and in_size.is_const and in_size.word >= 4:
                    head = mem.read_bytes(in_off.word, 4)
                    if head is not None:
                        input_selector = Selector(head)
                self.emit(name, pc, args, sel, conds, input_selector=input_selector)
                last_ret = AbstractValue(
                    Tag.EXTERNAL, site=pc, callee=addr, call_selector=input_selector, taint=addr.taint
                )
                if out_off.is_const and out_size.is_const:
                    if out_size.word:
                        mem = mem.write(_Write(out_off.word, min(out_size.word, 0x10000), last_ret))
                else:
                    mem = mem.clobber(addr.taint)
                stack.append(opaque())
            elif name in ("CREATE", "CREATE2"):
                args = pop(3 if name == "CREATE" else 4)
                if args is None:
                    return
                stack.append(opaque())
            elif name == "RETURN":
                args = pop(2)
                if args is None:
                    return
                off, size = args
                data = None
                if off.is_const and size.is_const and size.word >= 32 and off.word < 1 << 32:
                    data = mem.load(off.word)
                self.emit("RETURN", pc, args, sel, conds, data=data)
                return
            elif name == "SELFDESTRUCT":
                args = pop(1)
                if args is None:
                    return
                self.emit("SELFDESTRUCT", pc, args, sel, conds)
                return
            elif name in ("STOP", "REVERT", "INVALID"):
                return
            elif name == "JUMP":
                args = pop(1)
                if args is None:
                    return
                self.jump(args[0], pc, tuple(stack), mem, conds, sel, last_ret)
                return
            elif name == "JUMPI":
                args = pop(2)
                if args is None:
                    return
                dest, cond = args
                frozen = tuple(stack)
                if cond.is_const:
                    if cond.word:
                        self.jump(dest, pc, frozen, mem, conds, sel, last_ret)
                    else:
                        self.push_state(_State(nxt, frozen, mem, conds, sel, last_ret), counted=False)
                    return
                for taken in (True, False):
                    branch = self.branch(cond, taken, pc, conds, sel)
                    if branch is None:
                        continue
                    bconds, bsel = branch
                    if taken:
                        self.jump(dest, pc, frozen, mem, bconds, bsel, last_ret)
                    else:
                        self.push_state(_State(nxt, frozen, mem, bconds, bsel, last_ret), counted=False)
                return
            elif name.startswith("LOG"):
                if pop(int(name[3:]) + 2) is None:
                    return
            else:
                info_pops, info_pushes = _generic_arity(name)
                args = pop(info_pops)
                if args is None:
                    return
                taint = any(a.taint for a in args)
                for _ in range(info_pushes):
                    stack.append(opaque(taint))
            if len(stack) > _MAX_STACK:
                return
            pc = nxt
            if pc >= code_len:
                return

    def branch(self, cond: AbstractValue, taken: bool, pc: int, conds, sel):
        """Conditions and selector for one side of a JUMPI, or None if infeasible."""
        if cond.pred is None:
            return conds, sel
        pred = cond.pred
        equal = taken != pred.negated
        target = _selector_test(pred)
        if target is not None:
            if equal:
                if self.entry is Entry.FALLBACK:
                    return None
                if sel is not None and sel != target:
                    return None
                sel = target
            elif sel is not None and sel == target:
                return None
        if len(conds) < _MAX_CONDITIONS:
            conds = conds + (Condition(pred.left, pred.right, equal, pc),)
        return conds, sel

    def jump(self, dest: AbstractValue, pc: int, stack, mem, conds, sel, last_ret) -> None:
        self.jumps_seen += 1
        if not dest.is_const:
            self.unresolved.add(pc)
            return
        if dest.word not in self.p.jumpdests:
            return
        self.jumps_resolved += 1
        self.push_state(_State(dest.word, stack, mem, conds, sel, last_ret), counted=True)


_GENERIC = {
    "BALANCE": (1, 1), "ORIGIN": (0, 1), "CALLVALUE": (0, 1), "GASPRICE": (0, 1),
    "EXTCODESIZE": (1, 1), "RETURNDATASIZE": (0, 1), "EXTCODEHASH": (1, 1), "BLOCKHASH": (1, 1),
    "COINBASE": (0, 1), "TIMESTAMP": (0, 1), "NUMBER": (0, 1), "DIFFICULTY": (0, 1),
    "GASLIMIT": (0, 1), "CHAINID": (0, 1), "SELFBALANCE": (0, 1), "BASEFEE": (0, 1),
    "MSIZE": (0, 1), "GAS": (0, 1),
}


def _generic_arity(name: str) -> tuple[int, int]:
    return _GENERIC.get(name, (0, 0))


@lru_cache(maxsize=512)
def _interpret_cached(code: bytes, entry: Entry, budget: int, max_visits: int) -> Interpretation:
    run = _Run(Program(code), entry, budget, max_visits)
    run.run()
    error = None
    if run.jumps_seen and not run.jumps_resolved:
        error = MalformedJumpTable(f"none of {run.jumps_seen} reachable jumps hit a JUMPDEST")
    return Interpretation(
        entry=entry,
        events=tuple(run.events),
        steps=run.steps,
        truncated=run.truncated,
        unresolved_jumps=frozenset(run.unresolved),
        error=error,
    )


def interpret(
    code: bytes,
    entry: Entry | str = Entry.DISPATCH,
    budget: int = DEFAULT_BUDGET,
    max_visits: int = DEFAULT_MAX_VISITS,
) -> Interpretation:
    """Explore ``code`` and collect storage, call, return and self-destruct events.

    ``Entry.FALLBACK`` prunes every branch on which the dispatch selector matched
    a function, leaving only paths that reach the fallback.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    return _interpret_cached(bytes(code), Entry(entry), budget, max_visits)
