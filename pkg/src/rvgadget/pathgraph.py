"""Superset disassembly into a graph of every possible execution path.

Every even offset of every executable segment is decoded independently
(16-bit alignment is all the hardware can fetch, so odd offsets are never
tried).  Valid decodes become nodes; statically known successors become
edges; register-indirect jumps and calls have unknowable targets and are
marked as points of interest instead.  Pruning keeps the subgraph
coreachable from those points, and block merging collapses single-entry
single-exit chains for a readable control-flow graph that shows the main
and hidden execution paths side by side.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import isa

__all__ = [
    "PathGraph",
    "Block",
    "BlockGraph",
    "build",
    "prune_coreachable",
    "merge_blocks",
    "flatten",
    "to_dot",
]


@dataclass(frozen=True)
class PathGraph:
    """Instruction-level graph: nodes keyed by address, plus the PoI set.

    Successor targets that are not themselves decodable nodes (out of
    segment, or mid-garbage) are kept as dangling annotations on the
    source node rather than edges, so pruning stays well-defined.
    """

    nodes: dict
    edges: dict
    dangling: dict
    poi: frozenset


def build(image) -> PathGraph:
    """Decode at every even offset of every executable segment."""
    nodes = {}
    for seg in image.executable_segments:
        data = seg.data
        for off in range(0, len(data), 2):
            instr = isa.decode(data[off:off + 4], seg.base + off)
            if instr is not None:
                nodes[instr.address] = instr
    edges = {}
    dangling = {}
    poi = set()
    for addr, instr in nodes.items():
        if instr.flow in (isa.Flow.INDIRECT_JUMP, isa.Flow.INDIRECT_CALL):
            poi.add(addr)
        real, dead = [], []
        for target in isa.successors(instr):
            (real if target in nodes else dead).append(target)
        edges[addr] = tuple(sorted(real))
        if dead:
            dangling[addr] = tuple(sorted(dead))
    return PathGraph(nodes=nodes, edges=edges, dangling=dangling,
                     poi=frozenset(poi))


def predecessors(g: PathGraph) -> dict:
    """Reverse adjacency of the graph's edges."""
    preds = {addr: [] for addr in g.nodes}
    for src, targets in g.edges.items():
        for dst in targets:
            preds[dst].append(src)
    return {addr: tuple(sorted(ps)) for addr, ps in preds.items()}


def prune_coreachable(g: PathGraph) -> PathGraph:
    """Keep only nodes with a path to some point of interest."""
    preds = predecessors(g)
    alive = set(g.poi)
    stack = list(g.poi)
    while stack:
        addr = stack.pop()
        for p in preds[addr]:
            if p not in alive:
                alive.add(p)
                stack.append(p)
    nodes = {a: g.nodes[a] for a in alive}
    edges = {a: tuple(t for t in g.edges[a] if t in alive) for a in alive}
    dangling = {a: d for a, d in g.dangling.items() if a in alive}
    return PathGraph(nodes=nodes, edges=edges, dangling=dangling,
                     poi=g.poi & alive)


@dataclass(frozen=True)
class Block:
    """Maximal chain of fallthrough-adjacent single-entry single-exit nodes."""

    instructions: tuple

    @property
    def start(self) -> int:
        return self.instructions[0].address

    @property
    def last(self):
        return self.instructions[-1]

    def addresses(self) -> tuple:
        return tuple(i.address for i in self.instructions)


@dataclass(frozen=True)
class BlockGraph:
    blocks: dict        # start address -> Block
    edges: dict         # start address -> tuple of successor block starts
    block_of: dict      # instruction address -> containing block start
    dangling: dict      # inherited from the PathGraph
    poi: frozenset      # instruction addresses, always block tails


def merge_blocks(g: PathGraph) -> BlockGraph:
    """Collapse chains; boundaries sit at PoIs, branches, and joins.

    Two nodes merge only when the edge between them is the unique one on
    both sides and the target is the source's direct fallthrough neighbour,
    so a block's addresses always increase contiguously.
    """
    preds = predecessors(g)

    def merges_into(a: int) -> int | None:
        targets = g.edges[a]
        if len(targets) != 1:
            return None
        b = targets[0]
        if len(preds[b]) != 1:
            return None
        if b != a + g.nodes[a].width:
            return None
        return b

    heads = [a for a in g.nodes
             if not any(merges_into(p) == a for p in preds[a])]
    blocks = {}
    block_of = {}
    for head in heads:
        chain = [g.nodes[head]]
        cur = head
        while True:
            nxt = merges_into(cur)
            if nxt is None:
                break
            chain.append(g.nodes[nxt])
            cur = nxt
        blocks[head] = Block(instructions=tuple(chain))
        for instr in chain:
            block_of[instr.address] = head
    edges = {}
    for head, block in blocks.items():
        outs = {block_of[t] for t in g.edges[block.last.address]}
        edges[head] = tuple(sorted(outs))
    return BlockGraph(blocks=blocks, edges=edges, block_of=block_of,
                      dangling=dict(g.dangling), poi=g.poi)


def flatten(bg: BlockGraph) -> PathGraph:
    """Expand a BlockGraph back into the PathGraph it was merged from."""
    nodes = {}
    edges = {}
    for block in bg.blocks.values():
        instrs = block.instructions
        for i, instr in enumerate(instrs):
            nodes[instr.address] = instr
            if i + 1 < len(instrs):
                edges[instr.address] = (instrs[i + 1].address,)
        # every inter-block edge lands on a block head, so the tail's
        # instruction-level targets are exactly the block targets
        edges[instrs[-1].address] = tuple(sorted(bg.edges[block.start]))
    return PathGraph(nodes=nodes, edges=edges, dangling=dict(bg.dangling),
                     poi=bg.poi)


def to_dot(bg: BlockGraph, mep=frozenset()) -> str:
    """Deterministic Graphviz text; blocks entirely off the MEP are grey."""
    mep = set(mep)
    lines = ["digraph pathgraph {", "  node [shape=box, fontname=monospace];"]
    for start in sorted(bg.blocks):
        block = bg.blocks[start]
        label = "\\l".join(isa.render(i) for i in block.instructions) + "\\l"
        hidden = all(i.address not in mep for i in block.instructions)
        attrs = f'label="{label}"'
        if hidden:
            attrs += ", style=filled, fillcolor=grey"
        lines.append(f'  "{start:#x}" [{attrs}];')
    for start in sorted(bg.edges):
        for dst in bg.edges[start]:
            lines.append(f'  "{start:#x}" -> "{dst:#x}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
