"""Result records shared by the engines."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass
class BoundsResult:
    """Lower and upper expectation of h with provenance.

    ``enclosure`` is ``((lo_lo, lo_hi), (up_lo, up_hi))``: intervals that
    provably contain the exact lower and upper expectations, when the
    method can certify them.
    """

    lower: float
    upper: float
    method: str
    enclosure: Optional[tuple] = None
    size: Optional[int] = None
    seconds: float = 0.0
    metadata: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.lower = float(self.lower)
        self.upper = float(self.upper)

    def check(self, tol: float = 1e-9) -> bool:
        return self.lower <= self.upper + tol

    def negated(self) -> "BoundsResult":
        """Bounds of -h from bounds of h."""
        enc = None
        if self.enclosure is not None:
            (a, b), (c, d) = self.enclosure
            enc = ((-d, -c), (-b, -a))
        return BoundsResult(-self.upper, -self.lower, self.method, enc, self.size,
                            self.seconds, dict(self.metadata), list(self.warnings))
