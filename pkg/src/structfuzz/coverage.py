"""Edge coverage with hit-count bucketing and novelty verdicts.

A trace is a sparse mapping of edge id -> hit count for one execution.  The
campaign-lifetime CoverageMap keeps, per edge, a bitmask of which hit-count
buckets have ever been observed.  A candidate is interesting when it adds an
unseen edge or an unseen bucket on a known edge.
"""

from __future__ import annotations

from dataclasses import dataclass

# Hit counts collapse into 8 buckets: 1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128+.
_BUCKET_SMALL = [0] * 256
for _c in range(1, 256):
    if _c == 1:
        _b = 0
    elif _c == 2:
        _b = 1
    elif _c == 3:
        _b = 2
    elif _c <= 7:
        _b = 3
    elif _c <= 15:
        _b = 4
    elif _c <= 31:
        _b = 5
    elif _c <= 127:
        _b = 6
    else:
        _b = 7
    _BUCKET_SMALL[_c] = _b


def bucketize(count: int) -> int:
    """Map a positive hit count to its bucket index (0..7)."""
    if count < 1:
        raise ValueError(f"hit count must be >= 1, got {count}")
    if count < 256:
        return _BUCKET_SMALL[count]
    return 7


@dataclass(frozen=True)
class NoveltyVerdict:
    """What one execution added to the map.

    new_edges counts edge ids absent before the merge; new_buckets counts
    bucket bits newly set on edges that already existed.  new_edge_ids keeps
    the actual ids (sorted) for crash signatures.
    """

    new_edges: int
    new_buckets: int
    new_edge_ids: tuple[int, ...] = ()

    @property
    def is_interesting(self) -> bool:
        return self.new_edges > 0 or self.new_buckets > 0


NOT_INTERESTING = NoveltyVerdict(0, 0)


class CoverageMap:
    """Campaign-lifetime edge -> bucket-bitmask store."""

    __slots__ = ("buckets",)

    def __init__(self):
        self.buckets: dict[int, int] = {}

    @property
    def edges_seen(self) -> int:
        return len(self.buckets)

    def observe(self, trace: dict[int, int]) -> NoveltyVerdict:
        """OR-merge one trace into the map and report what was new.

        Idempotent: merging the same trace again yields is_interesting=False.
        """
        buckets = self.buckets
        new_edge_ids = []
        new_bucket_bits = 0
        for edge, count in trace.items():
            if count < 1:
                raise ValueError(f"hit count must be >= 1, got {count} for edge {edge}")
            bit = 1 << (_BUCKET_SMALL[count] if count < 256 else 7)
            old = buckets.get(edge)
            if old is None:
                buckets[edge] = bit
                new_edge_ids.append(edge)
            elif not old & bit:
                buckets[edge] = old | bit
                new_bucket_bits += 1
        if not new_edge_ids and not new_bucket_bits:
            return NOT_INTERESTING
        new_edge_ids.sort()
        return NoveltyVerdict(len(new_edge_ids), new_bucket_bits, tuple(new_edge_ids))


def observe(cov: CoverageMap, trace: dict[int, int]):
    """Merge trace into cov; returns (cov, verdict)."""
    return cov, cov.observe(trace)


def trace_from_dense(counts) -> dict[int, int]:
    """Convert a dense per-edge count array into a sparse trace."""
    return {edge: int(c) for edge, c in enumerate(counts) if c}
