import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple
from utils.errors import ConfigurationError


@dataclass(frozen=True)
class TruncationSchedule:
    """Interval boundaries t_0 = 0 < t_1 < t_2 < ... for TBPTT.

    Growing intervals: t_1 = 1 and t_{k+1} = t_k + ceil(t_k^A). With
    fixed_length=L the boundaries are t_k = k*L instead.
    """
    A: Optional[float] = None
    fixed_length: Optional[int] = None

    def __post_init__(self):
        if (self.A is None) == (self.fixed_length is None):
            raise ConfigurationError("TruncationSchedule needs exactly one of A or fixed_length")
        if self.A is not None and not 0.0 < self.A < 1.0:
            raise ConfigurationError(f"Truncation exponent A must lie in (0, 1), got {self.A}")
        if self.fixed_length is not None and self.fixed_length < 1:
            raise ConfigurationError(f"Fixed truncation length must be >= 1, got {self.fixed_length}")

    @property
    def growing(self) -> bool:
        return self.A is not None

    def next_time(self, t_k: int) -> int:
        if not self.growing:
            return t_k + self.fixed_length
        if t_k == 0:
            return 1
        return t_k + int(math.ceil(t_k ** self.A))

    def times(self) -> Iterator[int]:
        """Infinite sequence t_0, t_1, ..."""
        t = 0
        while True:
            yield t
            t = self.next_time(t)

    def times_up_to(self, k: int) -> List[int]:
        """t_0..t_k"""
        out = []
        for t in self.times():
            out.append(t)
            if len(out) > k:
                return out

    def intervals(self, T: int) -> Iterator[Tuple[int, int, int]]:
        """(k, t_k, t_{k+1}) covering [0, T]; the last interval is cut at T"""
        k = 0
        t = 0
        while t < T:
            t_next = min(self.next_time(t), T)
            yield k, t, t_next
            k += 1
            t = t_next

    def exponent(self) -> float:
        """A for growing intervals, 0 for a fixed length"""
        return self.A if self.growing else 0.0
