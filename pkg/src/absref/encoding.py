"""State-to-bit-vector encodings and conversion of state sets to BDDs.

Two injective encodings of abstract states are provided.  The log
encoding numbers states consecutively and uses the minimum possible
number of bits.  The split encoding assigns one bit per refinement
depth: children inherit the parent's bits with a single depth-indexed
bit distinguishing them, which preserves prefix structure between
geometric neighbours as the partition grows nonuniform.

Bit vectors are tuples of 0/1, most significant bit first.  Bit position
``i`` of a vector maps to position ``i`` of the associated variable
group, so growing an encoding inserts the fresh variable at the matching
position of the group (front for log, back for split) while the manager
allocates it at the end of the evaluation order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from . import UsageError
from .bdd import Bdd, BddManager

BitVec = tuple[int, ...]


class Role(Enum):
    STATE_FROM = "from"
    ACTION = "action"
    STATE_TO = "to"


@dataclass
class VarGroup:
    """Ordered block of manager variables playing one transition role."""

    role: Role
    vars: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.vars)


def log_width(n_states: int) -> int:
    """Minimum bits for ``n_states`` distinct values."""
    if n_states < 1:
        raise UsageError("need at least one state")
    return max(n_states - 1, 0).bit_length()


def log_encode(q: int, width: int) -> BitVec:
    """Binary representation of ``q - 1``, zero-padded to ``width`` bits.

    ``q`` is a 1-based state number in ``1 .. 2**width``.
    """
    if not 1 <= q <= 2**width:
        raise UsageError(f"state number {q} out of range for width {width}")
    return tuple((q - 1) >> (width - 1 - i) & 1 for i in range(width))


class LogEncoding:
    """Minimal-width numbering of states.

    On a split, the first child keeps the parent's number and the second
    takes number ``|Q| + 1``; the width grows exactly when all bit
    patterns of the current width are in use.
    """

    new_bit_side = "msb"

    def __init__(self, states):
        self._num: dict[int, int] = {}
        for i, q in enumerate(states):
            self._num[q] = i + 1
        self._rev = {n: q for q, n in self._num.items()}
        self._next = len(self._num) + 1

    @property
    def width(self) -> int:
        return log_width(max(self._next - 1, 1))

    def __len__(self) -> int:
        return len(self._num)

    def __contains__(self, q) -> bool:
        return q in self._num

    def states(self):
        return self._num.keys()

    def number(self, q: int) -> int:
        return self._num[q]

    def encode(self, q: int) -> BitVec:
        try:
            n = self._num[q]
        except KeyError:
            raise UsageError(f"state {q} is not encoded") from None
        return log_encode(n, self.width)

    def decode(self, bits: BitVec) -> int:
        n = 1 + int("".join(map(str, bits)) or "0", 2)
        try:
            return self._rev[n]
        except KeyError:
            raise UsageError(f"no state with number {n}") from None

    def add(self, q: int) -> None:
        """Encode a fresh state with the next unused number."""
        if q in self._num:
            raise UsageError(f"state {q} already encoded")
        self._num[q] = self._next
        self._rev[self._next] = q
        self._next += 1

    def split(self, parent: int, child1: int, child2: int) -> None:
        if parent not in self._num:
            raise UsageError(f"state {parent} is not encoded")
        n = self._num.pop(parent)
        self._num[child1] = n
        self._rev[n] = child1
        self._num[child2] = self._next
        self._rev[self._next] = child2
        self._next += 1


class SplitEncoding:
    """Refinement-aware encoding with one bit per splitting depth.

    Every state carries ``k + D`` bits where ``k`` covers the initial
    partition and ``D`` is the largest refinement depth reached.  Bits at
    positions beyond ``k + depth(q)`` are zero padding.  Splitting a
    state at depth ``d`` sets bit ``k + d + 1`` (1-based) to 0 and 1 in
    the two children; when ``d`` equals ``D`` every encoding is first
    extended by one zero bit.
    """

    new_bit_side = "lsb"

    def __init__(self, states, k: int | None = None):
        states = list(states)
        if k is None:
            k = log_width(len(states))
        self.k = k
        self.depth_max = 0
        self._bits: dict[int, BitVec] = {}
        self._depth: dict[int, int] = {}
        if len(states) > 2**k:
            raise UsageError("initial bit count too small for the partition")
        for i, q in enumerate(states):
            self._bits[q] = tuple((i >> (k - 1 - j)) & 1 for j in range(k))
            self._depth[q] = 0
        self._rev = {b: q for q, b in self._bits.items()}

    @property
    def width(self) -> int:
        return self.k + self.depth_max

    def __len__(self) -> int:
        return len(self._bits)

    def __contains__(self, q) -> bool:
        return q in self._bits

    def states(self):
        return self._bits.keys()

    def encode(self, q: int) -> BitVec:
        try:
            return self._bits[q]
        except KeyError:
            raise UsageError(f"state {q} is not encoded") from None

    def depth(self, q: int) -> int:
        return self._depth[q]

    def decode(self, bits: BitVec) -> int:
        try:
            return self._rev[tuple(bits)]
        except KeyError:
            raise UsageError(f"no state encoded as {bits}") from None

    def add(self, q: int) -> None:
        raise UsageError("the split encoding grows only by splitting states")

    def split(self, parent: int, child1: int, child2: int) -> None:
        if parent not in self._bits:
            raise UsageError(f"state {parent} is not encoded")
        d = self._depth[parent]
        if d == self.depth_max:
            # new largest depth: extend every encoding by a zero bit
            self.depth_max += 1
            self._bits = {q: b + (0,) for q, b in self._bits.items()}
            self._rev = {b: q for q, b in self._bits.items()}
        base = self._bits.pop(parent)
        del self._rev[base]
        del self._depth[parent]
        pos = self.k + d  # 0-based index of 1-based position k + d + 1
        b1 = base[:pos] + (0,) + base[pos + 1:]
        b2 = base[:pos] + (1,) + base[pos + 1:]
        self._bits[child1] = b1
        self._bits[child2] = b2
        self._rev[b1] = child1
        self._rev[b2] = child2
        self._depth[child1] = d + 1
        self._depth[child2] = d + 1


class StateVars:
    """Keeps a pair of from/to variable groups aligned with an encoding.

    Fresh variables are allocated at the end of the manager's evaluation
    order (as an interleaved from/to pair) and inserted into the groups
    at the position matching the encoding's new bit.
    """

    def __init__(self, mgr: BddManager, enc):
        self.mgr = mgr
        self.enc = enc
        self.from_group = VarGroup(Role.STATE_FROM)
        self.to_group = VarGroup(Role.STATE_TO)
        self.sync()

    def sync(self) -> list[tuple[int, int]]:
        """Grow the groups to the encoding width; returns new (from, to) pairs."""
        new = []
        while len(self.from_group.vars) < self.enc.width:
            zf = self.mgr.new_var()
            zt = self.mgr.new_var()
            if self.enc.new_bit_side == "msb":
                self.from_group.vars.insert(0, zf)
                self.to_group.vars.insert(0, zt)
            else:
                self.from_group.vars.append(zf)
                self.to_group.vars.append(zt)
            new.append((zf, zt))
        return new

    def rename_map(self, reverse: bool = False) -> dict[int, int]:
        src, dst = self.from_group.vars, self.to_group.vars
        if reverse:
            src, dst = dst, src
        return dict(zip(src, dst))


def interleaved_state_vars(mgr: BddManager, enc) -> StateVars:
    """Declare from/to variable pairs for ``enc`` in interleaved order."""
    return StateVars(mgr, enc)


def state_to_bdd(mgr: BddManager, bits: BitVec, group: VarGroup) -> Bdd:
    """Singleton characteristic function: one literal per bit of ``bits``."""
    if len(bits) != len(group.vars):
        raise UsageError(
            f"bit vector width {len(bits)} does not match group width {len(group.vars)}")
    return mgr.cube(zip(group.vars, bits))


def set_to_bdd(mgr: BddManager, states, enc, group: VarGroup) -> Bdd:
    """Disjunction of singleton BDDs for ``states`` under ``enc``."""
    cubes = [state_to_bdd(mgr, enc.encode(q), group) for q in states]
    return balanced_or(mgr, cubes)


def balanced_or(mgr: BddManager, items: list[Bdd]) -> Bdd:
    """Tree-shaped disjunction; keeps intermediate results small."""
    if not items:
        return mgr.false
    layer = items
    while len(layer) > 1:
        nxt = [
            layer[i] | layer[i + 1] if i + 1 < len(layer) else layer[i]
            for i in range(0, len(layer), 2)
        ]
        layer = nxt
    return layer[0]


def bdd_to_states(mgr: BddManager, b: Bdd, enc, group: VarGroup) -> set[int]:
    """Decode the satisfying assignments of ``b`` over ``group`` back to states."""
    return {enc.decode(bits) for bits in mgr.sat_iter(b, group.vars)}
