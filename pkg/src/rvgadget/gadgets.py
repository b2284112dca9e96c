"""Gadget discovery: baseline backward scan and full path enumeration.

A gadget is an instruction path ending at a point of interest (an indirect
jump or call).  The classic baseline walks backwards from every return and
only ever finds straight-line sequences; the full enumeration walks the
pruned block graph and also reports gadgets spanning several linear code
sequences, including ones whose head lives on a hidden execution path.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from . import isa

__all__ = [
    "GadgetKind",
    "Gadget",
    "MepSet",
    "Limits",
    "ScanResult",
    "DiffReport",
    "compute_mep",
    "galileo_scan",
    "enumerate_gadgets",
    "diff_scans",
    "report",
    "lcsaj_count",
]


class GadgetKind(enum.Enum):
    STRAIGHT_LINE = "StraightLine"
    MULTI_LCSAJ = "MultiLcsaj"


@dataclass(frozen=True)
class Gadget:
    """One reported path; the terminal is always a point of interest."""

    instructions: tuple
    terminal: int
    lcsaj_count: int
    hep_mask: tuple
    kind: GadgetKind

    @property
    def start(self) -> int:
        return self.instructions[0].address

    @property
    def path(self) -> tuple:
        return tuple(i.address for i in self.instructions)

    @property
    def width_bytes(self) -> int:
        return sum(i.width for i in self.instructions)

    @property
    def key(self) -> tuple:
        return (self.start, self.terminal)


@dataclass(frozen=True)
class MepSet:
    """Addresses on the main execution path."""

    addresses: frozenset

    def __contains__(self, address: int) -> bool:
        return address in self.addresses


@dataclass(frozen=True)
class Limits:
    max_instructions: int = 32
    max_lcsajs: int = 4

    def __post_init__(self):
        if self.max_instructions < 1 or self.max_lcsajs < 1:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class ScanResult:
    gadgets: tuple
    truncated: bool


@dataclass(frozen=True)
class DiffReport:
    """Gadgets the full scan reports that the baseline does not."""

    missed: tuple
    missed_multi_lcsaj: int
    missed_hep: int

    @property
    def missed_count(self) -> int:
        return len(self.missed)


# ---------------------------------------------------------------------------
# Main execution path
# ---------------------------------------------------------------------------

def _mep_successors(instr):
    """Where a conventional recursive-descent disassembler continues."""
    flow = instr.flow
    nxt = instr.address + instr.width
    if flow in (isa.Flow.FALLTHROUGH, isa.Flow.SYSCALL, isa.Flow.INDIRECT_CALL):
        return (nxt,)
    if flow == isa.Flow.DIRECT_JUMP:
        return (instr.address + instr.operands[-1],)
    if flow == isa.Flow.COND_BRANCH:
        return (nxt, instr.address + instr.operands[-1])
    if flow == isa.Flow.CALL:
        return (instr.address + instr.operands[-1], nxt)
    return ()  # indirect jump or halt


def _linear_sweep(image) -> set:
    swept = set()
    for seg in image.executable_segments:
        off = 0
        while off < len(seg.data):
            instr = isa.decode(seg.data[off:off + 4], seg.base + off)
            if instr is None:
                off += 2
                continue
            swept.add(instr.address)
            off += instr.width
    return swept


def compute_mep(image) -> MepSet:
    """Recursive descent from entry and symbols; linear sweep fallback.

    Follows fallthrough, both branch arms, direct jump and call targets,
    and call continuations; stops at indirect jumps and halts.  Images with
    neither entry nor symbols are swept linearly from each segment base.
    """
    seeds = []
    if image.entry is not None:
        seeds.append(image.entry)
    for sym in image.symbols:
        if image.in_executable(sym.address):
            seeds.append(sym.address)
    if not seeds:
        return MepSet(addresses=frozenset(_linear_sweep(image)))
    visited = set()
    stack = list(seeds)
    while stack:
        addr = stack.pop()
        if addr in visited or not image.in_executable(addr):
            continue
        data = image.read(addr, 4)
        instr = isa.decode(data, addr) if data else None
        if instr is None:
            continue
        visited.add(addr)
        for target in _mep_successors(instr):
            if target not in visited:
                stack.append(target)
    return MepSet(addresses=frozenset(visited))


# ---------------------------------------------------------------------------
# LCSAJ accounting
# ---------------------------------------------------------------------------

def _taken_transition(instr, next_address: int) -> bool:
    """True when the hop instr -> next_address is a taken jump.

    Only unconditional direct jumps and taken conditional-branch arms end a
    linear code sequence; calls and fallthroughs do not.
    """
    if instr.flow == isa.Flow.DIRECT_JUMP:
        return True
    if instr.flow == isa.Flow.COND_BRANCH:
        target = instr.address + instr.operands[-1]
        return next_address == target and next_address != instr.address + instr.width
    return False


def lcsaj_count(instructions) -> int:
    """1 + number of taken-jump transitions strictly inside the path."""
    count = 1
    for a, b in zip(instructions, instructions[1:]):
        if _taken_transition(a, b.address):
            count += 1
    return count


def _make_gadget(instructions, mep: MepSet) -> Gadget:
    n = lcsaj_count(instructions)
    kind = GadgetKind.STRAIGHT_LINE if n == 1 else GadgetKind.MULTI_LCSAJ
    return Gadget(
        instructions=tuple(instructions),
        terminal=instructions[-1].address,
        lcsaj_count=n,
        hep_mask=tuple(i.address not in mep for i in instructions),
        kind=kind,
    )


# ---------------------------------------------------------------------------
# Baseline scan
# ---------------------------------------------------------------------------

def _is_return(instr) -> bool:
    """Register-indirect jump through the return-address register."""
    if instr.mnemonic == "jalr" and instr.flow == isa.Flow.INDIRECT_JUMP:
        return instr.operands[1] == isa.Reg(1)
    return instr.mnemonic == "c.jr" and instr.operands[0] == isa.Reg(1)


def galileo_scan(image, window: int = 32) -> list:
    """Backward scan from every return found at any even offset.

    Each backward start that decodes into a valid straight-line sequence
    (no control transfers before the terminal) ending exactly at the return
    becomes one gadget.  This baseline cannot see gadgets spanning more
    than one linear code sequence.
    """
    if window < 2 or window % 2:
        raise ValueError("window must be even and >= 2")
    mep = compute_mep(image)
    gadgets = []
    for seg in image.executable_segments:
        data = seg.data
        returns = []
        for off in range(0, len(data), 2):
            instr = isa.decode(data[off:off + 4], seg.base + off)
            if instr is not None and _is_return(instr):
                returns.append(instr)
        for ret in returns:
            ret_off = ret.address - seg.base
            for back in range(0, window + 2, 2):
                start = ret_off - back
                if start < 0:
                    break
                chain = []
                off = start
                ok = True
                while off < ret_off:
                    instr = isa.decode(data[off:off + 4], seg.base + off)
                    if instr is None or instr.flow not in (
                            isa.Flow.FALLTHROUGH, isa.Flow.SYSCALL):
                        ok = False
                        break
                    chain.append(instr)
                    off += instr.width
                if ok and off == ret_off:
                    gadgets.append(_make_gadget(chain + [ret], mep))
    gadgets.sort(key=lambda g: (g.terminal, g.start))
    return gadgets


# ---------------------------------------------------------------------------
# Full enumeration over the block graph
# ---------------------------------------------------------------------------

def _bounded_suffix(instrs, limits: Limits):
    """Longest suffix of an instruction path within both limits."""
    count = 0
    lcsajs = 1
    start = len(instrs)
    for i in range(len(instrs) - 1, -1, -1):
        add = 0
        if i + 1 < len(instrs) and _taken_transition(instrs[i], instrs[i + 1].address):
            add = 1
        if count + 1 > limits.max_instructions or lcsajs + add > limits.max_lcsajs:
            break
        count += 1
        lcsajs += add
        start = i
    return tuple(instrs[start:]), start > 0


def _maximal_paths(block_graph, limits: Limits):
    """All backward-maximal simple block paths ending at a PoI block.

    Paths are returned as instruction tuples, already clipped to the
    limits; the flag reports whether any clipping happened.
    """
    bg = block_graph
    preds = {start: [] for start in bg.blocks}
    for src, targets in bg.edges.items():
        for dst in targets:
            preds[dst].append(src)
    for start in preds:
        preds[start].sort()

    internal_taken = {}
    for start, block in bg.blocks.items():
        internal_taken[start] = lcsaj_count(block.instructions) - 1

    paths = set()
    truncated = False

    def extend(seq, n_instr, n_lcsaj):
        nonlocal truncated
        visited = set(seq)
        grew = False
        if n_instr < limits.max_instructions:
            for p in preds[seq[0]]:
                if p in visited:
                    continue
                pblock = bg.blocks[p]
                hop = 1 if _taken_transition(
                    pblock.last, bg.blocks[seq[0]].start) else 0
                new_lcsaj = n_lcsaj + hop + internal_taken[p]
                if new_lcsaj > limits.max_lcsajs:
                    truncated = True
                    continue
                grew = True
                new_instr = n_instr + len(pblock.instructions)
                if new_instr >= limits.max_instructions:
                    if new_instr > limits.max_instructions or preds[p]:
                        truncated = True
                    emit([p] + seq)
                else:
                    extend([p] + seq, new_instr, new_lcsaj)
        else:
            truncated = truncated or bool(preds[seq[0]])
        if not grew:
            emit(seq)

    def emit(seq):
        nonlocal truncated
        instrs = []
        for start in seq:
            instrs.extend(bg.blocks[start].instructions)
        clipped, was_cut = _bounded_suffix(instrs, limits)
        if was_cut:
            truncated = True
        paths.add(clipped)

    for start, block in bg.blocks.items():
        if block.last.address not in bg.poi:
            continue
        base_lcsaj = 1 + internal_taken[start]
        n = len(block.instructions)
        if base_lcsaj > limits.max_lcsajs or n > limits.max_instructions:
            emit([start])
        else:
            extend([start], n, base_lcsaj)

    return paths, truncated


def _suppress_suffixes(paths):
    """Drop every path that is a proper suffix of another path."""
    shadowed = set()
    for p in paths:
        for i in range(1, len(p)):
            shadowed.add(p[i:])
    return [p for p in paths if p not in shadowed]


def _dedup(paths):
    """One gadget per (start, terminal); smallest address tuple wins."""
    best = {}
    for p in paths:
        key = (p[0].address, p[-1].address)
        tup = tuple(i.address for i in p)
        if key not in best or tup < best[key][0]:
            best[key] = (tup, p)
    return [p for _, p in best.values()]


def enumerate_gadgets(block_graph, mep: MepSet, limits: Limits = Limits(),
                      include_suffixes: bool = False) -> ScanResult:
    """Every simple path through the pruned block graph ending at a PoI.

    By default only backward-maximal paths are reported (each shorter
    gadget is a suffix of a reported one); include_suffixes restores the
    full set.  Identity is (start, terminal).  Limit overflow is reported
    via the truncated flag, never silently.
    """
    maximal, truncated = _maximal_paths(block_graph, limits)
    if include_suffixes:
        candidates = set()
        for p in maximal:
            candidates.update(p[i:] for i in range(len(p)))
    else:
        candidates = _suppress_suffixes(maximal)
    gadgets = [_make_gadget(p, mep) for p in _dedup(candidates)]
    gadgets.sort(key=lambda g: (g.terminal, g.start))
    return ScanResult(gadgets=tuple(gadgets), truncated=truncated)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def diff_scans(baseline, full) -> DiffReport:
    """Gadgets found only by the full scan, keyed by (start, terminal)."""
    seen = {g.key for g in baseline}
    missed = tuple(sorted((g for g in full if g.key not in seen),
                          key=lambda g: (g.terminal, g.start)))
    return DiffReport(
        missed=missed,
        missed_multi_lcsaj=sum(1 for g in missed
                               if g.kind == GadgetKind.MULTI_LCSAJ),
        missed_hep=sum(1 for g in missed if any(g.hep_mask)),
    )


def _operand_json(op):
    if isinstance(op, isa.Reg):
        return isa.reg_name(op.index)
    if isinstance(op, isa.FReg):
        return isa.freg_name(op.index)
    return op


def _gadget_dict(g: Gadget) -> dict:
    return {
        "start": g.start,
        "terminal": g.terminal,
        "width_bytes": g.width_bytes,
        "lcsaj_count": g.lcsaj_count,
        "kind": g.kind.value,
        "instructions": [
            {
                "address": instr.address,
                "mnemonic": instr.mnemonic,
                "operands": [_operand_json(o) for o in instr.operands],
                "hep": hep,
            }
            for instr, hep in zip(g.instructions, g.hep_mask)
        ],
    }


def _gadget_text(g: Gadget) -> str:
    lines = [f"gadget {g.start:#x}..{g.terminal:#x} kind={g.kind.value} "
             f"lcsajs={g.lcsaj_count} insns={len(g.instructions)}"]
    for instr, hep in zip(g.instructions, g.hep_mask):
        mark = "  [hep]" if hep else ""
        lines.append(f"  {instr.address:#010x}  {isa.render(instr)}{mark}")
    return "\n".join(lines)


def report(gadgets, fmt: str = "json") -> str:
    """Machine-readable JSON or a text report with ABI register names."""
    if fmt == "json":
        return json.dumps([_gadget_dict(g) for g in gadgets], indent=2)
    if fmt == "text":
        return "\n\n".join(_gadget_text(g) for g in gadgets)
    raise ValueError(f"unknown report format: {fmt}")
