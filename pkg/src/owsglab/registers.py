"""Named register layouts for multipartite states."""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Subsystem:
    name: str
    dim: int
    classical: bool = False

    def __post_init__(self):
        if not self.name:
            raise ValueError("subsystem name must be non-empty")
        if self.dim < 1:
            raise ValueError(f"subsystem {self.name!r} has non-positive dim {self.dim}")


class RegisterLayout:
    """Ordered collection of named subsystems with dimensions.

    Classical subsystems carry a fixed computational-basis labeling; a
    state is only valid on the layout if it is block-diagonal in every
    classical subsystem's basis.
    """

    def __init__(self, subsystems: Iterable[tuple[str, int, bool] | Subsystem]):
        subs = []
        for s in subsystems:
            subs.append(s if isinstance(s, Subsystem) else Subsystem(*s))
        names = [s.name for s in subs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate subsystem names in {names}")
        self._subs: tuple[Subsystem, ...] = tuple(subs)
        self._index = {s.name: i for i, s in enumerate(self._subs)}

    @property
    def subsystems(self) -> tuple[Subsystem, ...]:
        return self._subs

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self._subs)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self._subs)

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    def __len__(self) -> int:
        return len(self._subs)

    def __iter__(self):
        return iter(self._subs)

    def __eq__(self, other) -> bool:
        return isinstance(other, RegisterLayout) and self._subs == other._subs

    def __hash__(self):
        return hash(self._subs)

    def __repr__(self) -> str:
        parts = ", ".join(
            f"{s.name}:{s.dim}{'c' if s.classical else 'q'}" for s in self._subs
        )
        return f"RegisterLayout({parts})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown subsystem {name!r}; have {self.names}") from None

    def subsystem(self, name: str) -> Subsystem:
        return self._subs[self.index(name)]

    def positions(self, names: Sequence[str]) -> list[int]:
        return [self.index(n) for n in names]

    def restrict(self, names: Sequence[str]) -> "RegisterLayout":
        """Sub-layout of the given subsystems, in this layout's order."""
        keep = sorted(self.positions(names))
        return RegisterLayout([self._subs[i] for i in keep])

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(list(self._subs) + list(other._subs))

    def replace(self, **renames: str) -> "RegisterLayout":
        """Layout with subsystems renamed, e.g. layout.replace(Q='Q1')."""
        subs = [
            Subsystem(renames.get(s.name, s.name), s.dim, s.classical)
            for s in self._subs
        ]
        return RegisterLayout(subs)

    def to_json(self) -> list:
        return [[s.name, s.dim, s.classical] for s in self._subs]

    @classmethod
    def from_json(cls, data: list) -> "RegisterLayout":
        return cls([(str(n), int(d), bool(c)) for n, d, c in data])


def single(name: str, dim: int, classical: bool = False) -> RegisterLayout:
    return RegisterLayout([(name, dim, classical)])
