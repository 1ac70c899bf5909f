"""Node sets and predecessor structure of the refinement graph.

Nodes are addressed by level and position: word nodes ``N_w`` (one per encoder
input word, ``L_m·L_k``), segment nodes ``N_s`` (one per segment, expanded
graph only) and decoder nodes ``N_d`` (one per output step, ``L_k``).  Edges
only ever point from a lower level to a higher one, so word nodes have no
predecessors and are never changed by refinement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from gpas_summarizer.config import GraphKind, ModelConfig
from gpas_summarizer.exceptions import ConfigurationError, IndexLookupError

Level = Literal["word", "segment", "decoder"]


@dataclass(frozen=True)
class GraphSpec:
    """Predecessor sets ``P_i`` for one topology.

    Attributes:
        kind: Basic or expanded topology.
        segments: L_m.
        max_words: L_k.
    """

    kind: GraphKind
    segments: int
    max_words: int

    @classmethod
    def from_config(cls, config: ModelConfig) -> GraphSpec:
        return cls(config.graph, config.segments, config.max_words)

    def size(self, level: Level) -> int:
        if level == "word":
            return self.segments * self.max_words
        if level == "segment":
            return self.segments if self.kind is GraphKind.EXPANDED else 0
        if level == "decoder":
            return self.max_words
        msg = f"Unknown graph level {level!r}"
        raise ConfigurationError(msg)

    def predecessors(self, level: Level, index: int) -> range:
        """Indices of the predecessor nodes of node ``index`` at ``level``.

        Returns:
            A range over word indices (segment nodes, basic-graph decoder
            nodes) or segment indices (expanded-graph decoder nodes); empty
            for word nodes.
        """
        if not 0 <= index < self.size(level):
            msg = f"{level} node {index} does not exist in a {self.kind.value} graph"
            raise IndexLookupError(msg)
        if level == "word":
            return range(0)
        if level == "segment":
            return range(index * self.max_words, (index + 1) * self.max_words)
        if self.kind is GraphKind.EXPANDED:
            return range(self.segments)
        return range(self.size("word"))

    def predecessor_level(self, level: Level) -> Level | None:
        if level == "segment":
            return "word"
        if level == "decoder":
            return "segment" if self.kind is GraphKind.EXPANDED else "word"
        return None

    def edges(self) -> list[tuple[Level, int, Level, int]]:
        """Every ``(source level, source, target level, target)`` edge."""
        out: list[tuple[Level, int, Level, int]] = []
        targets: tuple[Level, ...] = ("segment", "decoder")
        for level in targets:
            src = self.predecessor_level(level)
            if src is None:
                continue
            for i in range(self.size(level)):
                out.extend((src, j, level, i) for j in self.predecessors(level, i))
        return out
