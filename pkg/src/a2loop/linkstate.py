"""Sectors, dilute link states on the cylinder, and planar diagram calculus.

Link states are role strings over ``.`` (vacant), ``|`` (defect), ``(`` and
``)``.  Arcs are matched cyclically, so an arc may pass behind the cylinder
through the seam that sits between node N-1 and node 0.  Defects are never
enclosed by an arc.

Diagram pieces (faces, projector terms, ...) are glued into networks by
``compile_network``; closed loops are traced and classified by their signed
number of seam crossings.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import threading
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

PRUNE = 1e-14

VACANT, DEFECT, OPEN, CLOSE = ".", "|", "(", ")"


class SectorError(ValueError):
    pass


class DiagramError(RuntimeError):
    """Raised when a contraction produces a non-planar or ill-wound result."""


@dataclass(frozen=True, order=True)
class Sector:
    N: int
    d: int
    v: int

    def __post_init__(self) -> None:
        if self.N < 1:
            raise SectorError("N must be at least 1")
        if not (0 <= self.d <= self.N and 0 <= self.v <= self.N):
            raise SectorError(f"invalid sector {self}")
        if (self.N - self.d - self.v) % 2 or self.N - self.d - self.v < 0:
            raise SectorError(f"N - d - v must be a non-negative even number, got {self}")

    @property
    def a(self) -> int:
        return (self.N - self.d - self.v) // 2

    @property
    def dim(self) -> int:
        return math.comb(self.N, self.v) * math.comb(self.N - self.v, self.a)

    def label(self) -> str:
        return f"N{self.N}d{self.d}v{self.v}"


def sectors(N: int) -> list[Sector]:
    if N < 1:
        raise SectorError("N must be at least 1")
    out = []
    for v in range(N + 1):
        for d in range(N - v + 1):
            if (N - v - d) % 2 == 0:
                out.append(Sector(N, d, v))
    return out


def cyclic_pairs(roles: str) -> tuple[tuple[int, int], ...]:
    """Match openers to closers going rightwards around the cycle.

    Returns (opener, closer) pairs.  Raises if the roles do not describe a
    valid state (unmatched brackets or an enclosed defect).
    """
    if not _is_valid(roles):
        raise SectorError(f"not a valid link state: {roles!r}")
    n = len(roles)
    matched: dict[int, int] = {}
    stack: list[int] = []
    for step in range(2 * n):
        i = step % n
        if i in matched:
            continue
        if roles[i] == OPEN and step < n:
            stack.append(i)
        elif roles[i] == CLOSE and stack:
            o = stack.pop()
            matched[o] = i
            matched[i] = o
    pairs = []
    for i, r in enumerate(roles):
        if r == OPEN:
            if i not in matched:
                raise SectorError(f"unmatched opener in {roles!r}")
            pairs.append((i, matched[i]))
        elif r == CLOSE and i not in matched:
            raise SectorError(f"unmatched closer in {roles!r}")
    return tuple(sorted(pairs))


def _is_valid(roles: str) -> bool:
    n = len(roles)
    if roles.count(OPEN) != roles.count(CLOSE):
        return False
    defects = [i for i, r in enumerate(roles) if r == DEFECT]
    if not defects:
        return True
    # between consecutive defects the word must be a balanced bracket word
    start = defects[0]
    depth = 0
    for step in range(1, n + 1):
        r = roles[(start + step) % n]
        if r == OPEN:
            depth += 1
        elif r == CLOSE:
            depth -= 1
            if depth < 0:
                return False
        elif r == DEFECT:
            if depth != 0:
                return False
    return depth == 0


@dataclass(frozen=True, order=True)
class LinkState:
    roles: str

    @property
    def N(self) -> int:
        return len(self.roles)

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return cyclic_pairs(self.roles)

    @property
    def occupied(self) -> tuple[bool, ...]:
        return tuple(r != VACANT for r in self.roles)

    @property
    def sector(self) -> Sector:
        return Sector(self.N, self.roles.count(DEFECT), self.roles.count(VACANT))

    def pairing_string(self) -> str:
        return " ".join(f"{i}-{j}" for i, j in self.pairs)


_STATE_CACHE: dict[Sector, tuple[LinkState, ...]] = {}
_STATE_LOCK = threading.Lock()


def enumerate_states(sector: Sector) -> tuple[LinkState, ...]:
    """Canonical basis of the standard module, sorted by role string."""
    with _STATE_LOCK:
        hit = _STATE_CACHE.get(sector)
    if hit is not None:
        return hit
    N, d, v, a = sector.N, sector.d, sector.v, sector.a
    found = []
    for vac in itertools.combinations(range(N), v):
        rest = [i for i in range(N) if i not in vac]
        n = len(rest)
        for defect_pos in itertools.combinations(range(n), d):
            others = [k for k in range(n) if k not in defect_pos]
            for openers in itertools.combinations(others, a):
                roles = [VACANT] * N
                for k in range(n):
                    if k in defect_pos:
                        roles[rest[k]] = DEFECT
                    elif k in openers:
                        roles[rest[k]] = OPEN
                    else:
                        roles[rest[k]] = CLOSE
                word = "".join(roles)
                if _is_valid(word):
                    found.append(LinkState(word))
    out = tuple(sorted(found))
    with _STATE_LOCK:
        _STATE_CACHE.setdefault(sector, out)
    return out


def state_index(sector: Sector) -> dict[str, int]:
    return {s.roles: i for i, s in enumerate(enumerate_states(sector))}


def full_basis(N: int) -> list[tuple[Sector, LinkState]]:
    if N < 1:
        raise SectorError("N must be at least 1")
    return [(sec, st) for sec in sectors(N) for st in enumerate_states(sec)]


def basis_csv(secs: Iterable[Sector]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sector", "index", "roles", "pairing"])
    for sec in secs:
        for i, st in enumerate(enumerate_states(sec)):
            w.writerow([sec.label(), i, st.roles, st.pairing_string()])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# planar diagrams


@dataclass(frozen=True, order=True)
class PatchDiagram:
    """Connectivity of boundary slots.

    ``winding[k]`` counts signed seam crossings going from ``pairs[k][0]`` to
    ``pairs[k][1]``; it is identically zero for diagrams on a disk.
    """

    occupied: tuple[bool, ...]
    pairs: tuple[tuple[int, int], ...]
    winding: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        w = self.winding or (0,) * len(self.pairs)
        order = sorted(range(len(self.pairs)), key=lambda k: tuple(sorted(self.pairs[k])))
        pairs, wind = [], []
        for k in order:
            i, j = self.pairs[k]
            if i > j:
                i, j, sign = j, i, -1
            else:
                sign = 1
            pairs.append((i, j))
            wind.append(sign * w[k])
        object.__setattr__(self, "pairs", tuple(pairs))
        object.__setattr__(self, "winding", tuple(wind))
        used = sorted(x for p in pairs for x in p)
        occ = [k for k, o in enumerate(self.occupied) if o]
        if used != occ:
            raise DiagramError(f"pairs {pairs} do not match occupancy {self.occupied}")

    @property
    def size(self) -> int:
        return len(self.occupied)

    def relabel(self, perm: Sequence[int]) -> "PatchDiagram":
        """Slot k of self becomes slot perm[k]."""
        occ = [False] * self.size
        for k, o in enumerate(self.occupied):
            occ[perm[k]] = o
        pairs = tuple((perm[i], perm[j]) for i, j in self.pairs)
        return PatchDiagram(tuple(occ), pairs, self.winding)

    def to_json(self) -> dict:
        return {
            "edges": "".join("1" if o else "0" for o in self.occupied),
            "pairs": [list(p) for p in self.pairs],
            "winding": list(self.winding),
        }


def patch(occ: str, *pairs: tuple[int, int]) -> PatchDiagram:
    """Shorthand: ``patch("1010", (0, 2))``."""
    return PatchDiagram(tuple(c == "1" for c in occ), tuple(pairs))


class DiagramSum:
    """Formal linear combination of patch diagrams with a fixed arity."""

    __slots__ = ("size", "terms")

    def __init__(self, size: int, terms: Mapping[PatchDiagram, complex] | None = None):
        self.size = size
        self.terms: dict[PatchDiagram, complex] = {}
        for k, c in (terms or {}).items():
            self.add(k, c)

    def add(self, diagram: PatchDiagram, coeff: complex) -> None:
        if diagram.size != self.size:
            raise DiagramError("arity mismatch")
        self.terms[diagram] = self.terms.get(diagram, 0) + coeff

    def pruned(self, tol: float = PRUNE) -> "DiagramSum":
        return DiagramSum(self.size, {k: c for k, c in self.terms.items() if abs(c) > tol})

    def canonical(self) -> dict[PatchDiagram, complex]:
        return dict(sorted(self.pruned().terms.items()))

    def __add__(self, other: "DiagramSum") -> "DiagramSum":
        out = DiagramSum(self.size, self.terms)
        for k, c in other.terms.items():
            out.add(k, c)
        return out

    def __sub__(self, other: "DiagramSum") -> "DiagramSum":
        return self + other * -1

    def __mul__(self, x: complex) -> "DiagramSum":
        return DiagramSum(self.size, {k: c * x for k, c in self.terms.items()})

    __rmul__ = __mul__

    def norm(self) -> float:
        return math.sqrt(sum(abs(c) ** 2 for c in self.terms.values()))

    def coefficient(self, diagram: PatchDiagram) -> complex:
        return self.terms.get(diagram, 0)

    def relabel(self, perm: Sequence[int]) -> "DiagramSum":
        return DiagramSum(self.size, {k.relabel(perm): c for k, c in self.terms.items()})

    def __repr__(self) -> str:
        return f"DiagramSum({self.size}, {len(self.terms)} terms)"


def residual(lhs: DiagramSum, rhs: DiagramSum) -> float:
    diff = (lhs - rhs).norm()
    return diff / (lhs.norm() + rhs.norm() + 1.0)


def identity_patch(n: int) -> DiagramSum:
    """Identity on n dilute strands; slots 0..n-1 bottom, n..2n-1 top."""
    out = DiagramSum(2 * n)
    for occ in itertools.product((False, True), repeat=n):
        o = tuple(occ) + tuple(occ)
        pairs = tuple((k, k + n) for k in range(n) if occ[k])
        out.add(PatchDiagram(o, pairs), 1.0)
    return out


# ---------------------------------------------------------------------------
# network contraction


@dataclass
class Piece:
    """A diagram piece: ordered port names and a list of term structures."""

    ports: tuple[str, ...]
    terms: tuple[PatchDiagram, ...]
    name: str = ""

    def __post_init__(self) -> None:
        for t in self.terms:
            if t.size != len(self.ports):
                raise DiagramError(f"term arity {t.size} != ports {len(self.ports)}")


@dataclass
class CompiledNetwork:
    """All consistent term choices of a network, with their glued results."""

    external: tuple[str, ...]
    combos: np.ndarray          # (n_combo, n_pieces) term indices
    target: np.ndarray          # (n_combo,) index into diagrams
    contractible: np.ndarray    # (n_combo,) closed contractible loops
    noncontractible: np.ndarray # (n_combo,) closed loops around the cylinder
    diagrams: list[PatchDiagram]

    def coefficients(self, weights: Sequence[np.ndarray], beta: complex, alpha: complex = 0.0) -> np.ndarray:
        """Coefficient of each result diagram for given per-piece term weights."""
        n = len(self.diagrams)
        if len(self.combos) == 0:
            return np.zeros(n, dtype=complex)
        val = np.ones(len(self.combos), dtype=complex)
        for p, w in enumerate(weights):
            val *= np.asarray(w, dtype=complex)[self.combos[:, p]]
        if np.any(self.contractible):
            val *= np.power(complex(beta), self.contractible)
        if np.any(self.noncontractible):
            val *= np.power(complex(alpha), self.noncontractible)
        out = np.zeros(n, dtype=complex)
        np.add.at(out, self.target, val)
        return out

    def evaluate(self, weights: Sequence[np.ndarray], beta: complex, alpha: complex = 0.0) -> DiagramSum:
        coeffs = self.coefficients(weights, beta, alpha)
        out = DiagramSum(len(self.external))
        for dgm, c in zip(self.diagrams, coeffs):
            if abs(c) > PRUNE:
                out.add(dgm, c)
        return out


def compile_network(
    pieces: Sequence[Piece],
    external: Sequence[str],
    seam: Mapping[str, tuple[int, int]] | None = None,
) -> CompiledNetwork:
    """Enumerate every consistent choice of one term per piece and glue.

    Each port name occurs on one piece (external) or two pieces (internal).
    ``seam[name] = (piece, port)`` marks an internal edge crossing the seam:
    leaving that half-edge towards its partner counts as one rightward
    crossing.
    """
    seam = dict(seam or {})
    halves: dict[str, list[tuple[int, int]]] = {}
    for p, pc in enumerate(pieces):
        for k, nm in enumerate(pc.ports):
            halves.setdefault(nm, []).append((p, k))
    ext = tuple(external)
    for nm, hs in halves.items():
        if len(hs) > 2:
            raise DiagramError(f"port {nm!r} used more than twice")
        if len(hs) == 1 and nm not in ext:
            raise DiagramError(f"dangling port {nm!r}")
        if len(hs) == 2 and nm in ext:
            raise DiagramError(f"external port {nm!r} is glued")
    ext_pos = {nm: i for i, nm in enumerate(ext)}

    # partner half-edge across an internal name, with crossing count
    across: dict[tuple[int, int], tuple[tuple[int, int], int]] = {}
    for nm, hs in halves.items():
        if len(hs) == 2:
            h0, h1 = hs
            c = 0
            if nm in seam:
                src = tuple(seam[nm])
                if src == h0:
                    c = 1
                elif src == h1:
                    c = -1
                else:
                    raise DiagramError(f"seam marker for {nm!r} names no half-edge")
            across[h0] = (h1, c)
            across[h1] = (h0, -c)

    # per piece: occupancy of each term, and partner tables
    occ_tab = [[t.occupied for t in pc.terms] for pc in pieces]
    partner_tab = []
    for pc in pieces:
        rows = []
        for t in pc.terms:
            m = {}
            for (i, j), w in zip(t.pairs, t.winding):
                m[i] = (j, w)
                m[j] = (i, -w)
            rows.append(m)
        partner_tab.append(rows)

    combos: list[tuple[int, ...]] = []
    occ_state: dict[str, bool] = {}
    choice = [0] * len(pieces)

    def dfs(p: int) -> None:
        if p == len(pieces):
            combos.append(tuple(choice))
            return
        ports = pieces[p].ports
        for ti, occ in enumerate(occ_tab[p]):
            ok = True
            newly = []
            for k, nm in enumerate(ports):
                have = occ_state.get(nm)
                if have is None:
                    occ_state[nm] = occ[k]
                    newly.append(nm)
                elif have != occ[k]:
                    ok = False
                    break
            if ok:
                choice[p] = ti
                dfs(p + 1)
            for nm in newly:
                del occ_state[nm]

    dfs(0)

    diagrams: dict[PatchDiagram, int] = {}
    target = np.zeros(len(combos), dtype=np.int64)
    contract = np.zeros(len(combos), dtype=np.int64)
    noncontract = np.zeros(len(combos), dtype=np.int64)
    for ci, combo in enumerate(combos):
        visited: set[tuple[int, int]] = set()

        def walk(h: tuple[int, int]) -> tuple[tuple[int, int], int]:
            """From half-edge h, cross its piece then continue until external."""
            total = 0
            cur = h
            while True:
                visited.add(cur)
                nxt, w = partner_tab[cur[0]][combo[cur[0]]][cur[1]]
                total += w
                cur = (cur[0], nxt)
                visited.add(cur)
                if cur not in across:
                    return cur, total
                cur, c = across[cur]
                total += c

        ext_occ = [False] * len(ext)
        pairs, winds = [], []
        for nm in ext:
            h = halves[nm][0]
            if h in visited:
                continue
            if not occ_tab[h[0]][combo[h[0]]][h[1]]:
                continue
            end, total = walk(h)
            a, b = ext_pos[nm], ext_pos[pieces[end[0]].ports[end[1]]]
            ext_occ[a] = ext_occ[b] = True
            pairs.append((a, b))
            winds.append(total)
        nc = nn = 0
        for p, pc in enumerate(pieces):
            occ = occ_tab[p][combo[p]]
            for k in range(len(pc.ports)):
                h = (p, k)
                if not occ[k] or h in visited:
                    continue
                # closed loop: walk until we come back to h
                total = 0
                cur = h
                while True:
                    visited.add(cur)
                    nxt, w = partner_tab[cur[0]][combo[cur[0]]][cur[1]]
                    total += w
                    cur = (cur[0], nxt)
                    visited.add(cur)
                    cur, c = across[cur]
                    total += c
                    if cur == h:
                        break
                if total == 0:
                    nc += 1
                elif abs(total) == 1:
                    nn += 1
                else:
                    raise DiagramError(f"closed loop winds {total} times")
        dgm = PatchDiagram(tuple(ext_occ), tuple(pairs), tuple(winds))
        target[ci] = diagrams.setdefault(dgm, len(diagrams))
        contract[ci] = nc
        noncontract[ci] = nn
    combo_arr = np.array(combos, dtype=np.int64).reshape(len(combos), len(pieces))
    return CompiledNetwork(ext, combo_arr, target, contract, noncontract, list(diagrams))


def contract(pieces_with_weights: Sequence[tuple[Piece, Sequence[complex]]], external: Sequence[str],
             beta: complex, seam=None, alpha: complex = 0.0) -> DiagramSum:
    pieces = [p for p, _ in pieces_with_weights]
    weights = [np.asarray(w, dtype=complex) for _, w in pieces_with_weights]
    return compile_network(pieces, external, seam).evaluate(weights, beta, alpha)


def sum_as_piece(ports: Sequence[str], body: DiagramSum, name: str = "") -> tuple[Piece, np.ndarray]:
    terms = tuple(body.terms)
    return Piece(tuple(ports), terms, name), np.array([body.terms[t] for t in terms], dtype=complex)


def compose(top: DiagramSum, bottom: DiagramSum, n_mid: int, beta: complex) -> DiagramSum:
    """Stack ``top`` on ``bottom`` along ``n_mid`` shared strands.

    Slot convention for an operator on strands: bottom slots first (left to
    right), then top slots (left to right).  The result uses the bottom slots
    of ``bottom`` followed by the top slots of ``top``.
    """
    nb = bottom.size - n_mid
    nt = top.size - n_mid
    b_ports = [f"x{k}" for k in range(nb)] + [f"m{k}" for k in range(n_mid)]
    t_ports = [f"m{k}" for k in range(n_mid)] + [f"y{k}" for k in range(nt)]
    pb, wb = sum_as_piece(b_ports, bottom)
    pt, wt = sum_as_piece(t_ports, top)
    ext = [f"x{k}" for k in range(nb)] + [f"y{k}" for k in range(nt)]
    return contract([(pb, wb), (pt, wt)], ext, beta)


# ---------------------------------------------------------------------------
# rows acting on link states


@dataclass(frozen=True)
class StateAction:
    target: str
    omega_power: int
    n_beta: int
    n_alpha: int


def act_on_state(row: PatchDiagram, state: LinkState) -> StateAction | None:
    """Glue a periodic row diagram under a link state.

    Row slots 0..N-1 are attached to the state's nodes, slots N..2N-1 are the
    new nodes.  Windings count rightward seam crossings.  Returns None when the
    product vanishes (occupancy clash or lost defects).
    """
    N = state.N
    if row.size != 2 * N:
        raise DiagramError("row arity does not match state")
    if tuple(row.occupied[:N]) != state.occupied:
        return None
    link: dict[int, tuple[int, int]] = {}
    for (i, j), w in zip(row.pairs, row.winding):
        link[i] = (j, w)
        link[j] = (i, -w)
    arc: dict[int, tuple[int, int]] = {}
    for o, c in state.pairs:
        w = 1 if c < o else 0
        arc[o] = (c, w)
        arc[c] = (o, -w)
    roles = state.roles
    seen: set[int] = set()
    out = [VACANT] * N
    omega_power = 0
    n_def = 0
    for b in range(N, 2 * N):
        if not row.occupied[b] or b in seen:
            continue
        seen.add(b)
        cur, total = link[b]
        while True:
            seen.add(cur)
            if cur >= N:
                i, j = b - N, cur - N
                # total counts crossings from b to cur
                lo, hi, w = (i, j, total) if i < j else (j, i, -total)
                if w == 0:
                    out[lo], out[hi] = OPEN, CLOSE
                elif w == -1:
                    out[hi], out[lo] = OPEN, CLOSE
                else:
                    raise DiagramError(f"arc winds {w} times")
                break
            if roles[cur] == DEFECT:
                out[b - N] = DEFECT
                omega_power += total
                n_def += 1
                break
            nxt, w = arc[cur]
            seen.add(nxt)
            total += w
            cur, w2 = link[nxt]
            total += w2
    if n_def != roles.count(DEFECT):
        return None
    n_beta = n_alpha = 0
    for o, _ in state.pairs:
        if o in seen:
            continue
        cur = o
        total = 0
        while True:
            seen.add(cur)
            nxt, w = arc[cur]
            seen.add(nxt)
            total += w
            cur, w2 = link[nxt]
            total += w2
            if cur == o:
                break
        if total == 0:
            n_beta += 1
        elif abs(total) == 1:
            n_alpha += 1
        else:
            raise DiagramError(f"loop winds {total} times")
    return StateAction("".join(out), omega_power, n_beta, n_alpha)


def row_matrix(row: PatchDiagram, sector: Sector, beta: complex, alpha: complex, omega: complex,
               out_sector: Sector | None = None) -> np.ndarray:
    """Matrix of a single row diagram from ``sector`` to ``out_sector``."""
    out_sector = out_sector or sector
    src = enumerate_states(sector)
    idx = state_index(out_sector)
    mat = np.zeros((len(idx), len(src)), dtype=complex)
    for col, st in enumerate(src):
        res = act_on_state(row, st)
        if res is None or res.target not in idx:
            continue
        mat[idx[res.target], col] += (complex(omega) ** res.omega_power * complex(beta) ** res.n_beta
                                      * complex(alpha) ** res.n_alpha)
    return mat
