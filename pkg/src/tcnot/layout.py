"""Code layouts: qubit placement, stabilizer supports and CNOT schedules.

Two code families are supported:

* distance-d repetition code (Z-checks only), data qubits on a line;
* distance-d rotated surface code, data qubits on a d x d grid with
  (d^2 - 1)/2 plaquettes per basis and weight-2 plaquettes on the boundary.

Coordinates for the surface code follow the usual doubled-grid convention:
data qubits sit at odd-odd coordinates (2c+1, 2r+1), plaquette ancillas at
even-even coordinates.  Z-type boundary plaquettes live on the left/right
edges, X-type on top/bottom, so the logical Z runs along a horizontal row
of data qubits and the logical X along a vertical column.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Plaquette:
    ancilla: int                 # ancilla index, local to the patch
    data: tuple[int, ...]        # ordered data-qubit supports (schedule order)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(q for q in self.data if q >= 0)


@dataclass(frozen=True)
class PatchLayout:
    """Static geometry of one logical patch."""

    kind: str                    # "repetition" | "surface"
    distance: int
    num_data: int
    num_ancilla: int
    z_plaquettes: tuple[Plaquette, ...]
    x_plaquettes: tuple[Plaquette, ...]
    logical_z_support: frozenset[int]
    logical_x_support: frozenset[int]
    data_coords: tuple[tuple[int, int], ...] = field(default=())

    @property
    def num_qubits(self) -> int:
        return self.num_data + self.num_ancilla

    def plaquettes(self, basis: str) -> tuple[Plaquette, ...]:
        if basis == "Z":
            return self.z_plaquettes
        if basis == "X":
            return self.x_plaquettes
        raise LayoutError(f"unknown basis {basis!r}")

    def logical_support(self, basis: str) -> frozenset[int]:
        return self.logical_z_support if basis == "Z" else self.logical_x_support

    def checks_containing(self, basis: str) -> dict[int, list[int]]:
        """Map data qubit -> sorted list of basis-check indices containing it."""
        out: dict[int, list[int]] = {q: [] for q in range(self.num_data)}
        for idx, plq in enumerate(self.plaquettes(basis)):
            for q in sorted(plq.support):
                out[q].append(idx)
        return out


def _require_odd_distance(d: int) -> None:
    if d < 3 or d % 2 == 0:
        raise LayoutError(f"distance must be an odd integer >= 3, got {d}")


def repetition_layout(d: int) -> PatchLayout:
    """Line of d data qubits with d-1 two-body ZZ checks.

    Check j compares data qubits j and j+1.  Logical Z is Z on data qubit 0,
    logical X is X on every data qubit.
    """
    _require_odd_distance(d)
    z_plaquettes = tuple(
        Plaquette(ancilla=j, data=(j, j + 1)) for j in range(d - 1))
    return PatchLayout(
        kind="repetition",
        distance=d,
        num_data=d,
        num_ancilla=d - 1,
        z_plaquettes=z_plaquettes,
        x_plaquettes=(),
        logical_z_support=frozenset({0}),
        logical_x_support=frozenset(range(d)),
    )


# Data-qubit read order for the four plaquette CNOT steps.  The X and Z
# orders are transposes of each other so that every step touches each data
# qubit at most once and hook errors align with the code's boundaries.
_X_ORDER = ((1, 1), (-1, 1), (1, -1), (-1, -1))
_Z_ORDER = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def surface_layout(d: int) -> PatchLayout:
    """Rotated surface code on a d x d data grid."""
    _require_odd_distance(d)
    width = 2 * d + 1

    data_index: dict[tuple[int, int], int] = {}
    data_coords: list[tuple[int, int]] = []
    for row in range(d):
        for col in range(d):
            coord = (2 * col + 1, 2 * row + 1)
            data_index[coord] = len(data_coords)
            data_coords.append(coord)

    def plaquette_type(a: int, b: int) -> str:
        return "Z" if (a + b) % 2 == 0 else "X"

    z_plaquettes: list[Plaquette] = []
    x_plaquettes: list[Plaquette] = []
    for a in range(d + 1):
        for b in range(d + 1):
            cx, cy = 2 * a, 2 * b
            basis = plaquette_type(a, b)
            order = _Z_ORDER if basis == "Z" else _X_ORDER
            neighbors = tuple(
                data_index.get((cx + dx, cy + dy), -1) for dx, dy in order)
            present = [q for q in neighbors if q >= 0]
            if len(present) == 4:
                pass
            elif len(present) == 2:
                # Boundary plaquettes: Z survive on left/right edges only,
                # X on top/bottom only.
                on_lr = a in (0, d)
                if basis == "Z" and not on_lr:
                    continue
                if basis == "X" and on_lr:
                    continue
            else:
                continue
            plq_list = z_plaquettes if basis == "Z" else x_plaquettes
            plq_list.append(Plaquette(ancilla=len(z_plaquettes) + len(x_plaquettes),
                                      data=neighbors))

    # Re-number ancillas: all Z plaquettes first, then all X plaquettes.
    z_plaquettes = [Plaquette(ancilla=i, data=p.data)
                    for i, p in enumerate(z_plaquettes)]
    x_plaquettes = [Plaquette(ancilla=len(z_plaquettes) + i, data=p.data)
                    for i, p in enumerate(x_plaquettes)]

    expected = (d * d - 1) // 2
    if len(z_plaquettes) != expected or len(x_plaquettes) != expected:
        raise LayoutError(
            f"plaquette count mismatch for d={d}: "
            f"{len(z_plaquettes)} Z, {len(x_plaquettes)} X, expected {expected}")

    logical_z = frozenset(data_index[(2 * col + 1, 1)] for col in range(d))
    logical_x = frozenset(data_index[(1, 2 * row + 1)] for row in range(d))

    layout = PatchLayout(
        kind="surface",
        distance=d,
        num_data=d * d,
        num_ancilla=d * d - 1,
        z_plaquettes=tuple(z_plaquettes),
        x_plaquettes=tuple(x_plaquettes),
        logical_z_support=logical_z,
        logical_x_support=logical_x,
        data_coords=tuple(data_coords),
    )
    _check_commutation(layout)
    return layout


def _check_commutation(layout: PatchLayout) -> None:
    """Every X plaquette must overlap every Z plaquette on an even set."""
    for xp in layout.x_plaquettes:
        for zp in layout.z_plaquettes:
            if len(xp.support & zp.support) % 2 != 0:
                raise LayoutError(
                    f"stabilizers anticommute: X{tuple(sorted(xp.support))} "
                    f"vs Z{tuple(sorted(zp.support))}")
    for basis in ("Z", "X"):
        log = layout.logical_support(basis)
        opposing = layout.x_plaquettes if basis == "Z" else layout.z_plaquettes
        for plq in opposing:
            if len(plq.support & log) % 2 != 0:
                raise LayoutError(
                    f"logical {basis} anticommutes with a stabilizer")
