"""SMILES parsing and circular fragment enumeration.

The parser covers the organic subset, aromatic lowercase atoms, bracket atoms
(isotope, H count, charge), ring closures including ``%nn``, branches and the
bond symbols ``- = # :``. Stereo markers are accepted and discarded.

Fragment keys follow the ECFP update rule: an atom's code at radius ``r`` is a
64-bit hash of its code at ``r - 1`` together with the sorted
``(bond_order, neighbor_code)`` pairs of its neighbors. Keys are never folded.
Duplicate environments are kept, one hit per (atom, radius).
"""

from __future__ import annotations

import hashlib
import struct
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import NamedTuple

AROMATIC = 4  # bond order code for aromatic bonds

ORGANIC_SUBSET = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")

# allowed valences for implicit-hydrogen assignment (organic subset only)
VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

ELEMENTS = frozenset(
    """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni
    Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe
    Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg
    Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U""".split()
)
AROMATIC_BRACKET = frozenset({"b", "c", "n", "o", "p", "s", "se", "as", "te"})

_BOND_SYMBOLS = {"-": 1, "=": 2, "#": 3, ":": AROMATIC}


class SmilesError(ValueError):
    """Malformed or unsupported SMILES; ``offset`` is the character position."""

    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}" + (f" in {text!r}" if text else ""))
        self.offset = offset
        self.text = text


@dataclass
class Atom:
    element: str
    formal_charge: int = 0
    explicit_h: int = 0
    aromatic: bool = False
    ring_member: bool = False
    degree: int = 0
    implicit_h: int = 0
    isotope: int | None = None
    bracket: bool = False

    @property
    def total_h(self) -> int:
        return self.explicit_h + self.implicit_h


@dataclass
class Molecule:
    atoms: list[Atom]
    bonds: list[tuple[int, int, int]]
    source_text: str = ""

    def __post_init__(self):
        self._adjacency: list[list[tuple[int, int]]] | None = None

    @property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per atom, the list of ``(neighbor, bond_order)`` pairs."""
        if self._adjacency is None:
            adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
            for i, j, order in self.bonds:
                adj[i].append((j, order))
                adj[j].append((i, order))
            self._adjacency = adj
        return self._adjacency

    def __len__(self) -> int:
        return len(self.atoms)


class FragmentHit(NamedTuple):
    key: int
    depth: int
    center: int
    count: int = 1


@dataclass
class FragmentIndex:
    molecule_id: int
    hits: list[FragmentHit]
    n_atoms: int
    radius: int
    key_presence: frozenset[int] = field(init=False)
    key_counts: dict[int, int] = field(init=False)

    def __post_init__(self):
        self.key_counts = dict(Counter(h.key for h in self.hits))
        self.key_presence = frozenset(self.key_counts)

    def keys_up_to(self, depth: int) -> frozenset[int]:
        return frozenset(h.key for h in self.hits if h.depth <= depth)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _parse_bracket(text: str, start: int) -> tuple[Atom, int]:
    """Parse ``[...]`` beginning at ``start``; return the atom and the index after ``]``."""
    end = text.find("]", start)
    if end < 0:
        raise SmilesError("unterminated bracket atom", start, text)
    body = text[start + 1 : end]
    pos = 0

    isotope = None
    digits = ""
    while pos < len(body) and body[pos].isdigit():
        digits += body[pos]
        pos += 1
    if digits:
        isotope = int(digits)

    symbol = None
    aromatic = False
    for cand in (body[pos : pos + 2], body[pos : pos + 1]):
        if len(cand) == 2 and cand in AROMATIC_BRACKET:
            symbol, aromatic = cand.capitalize(), True
            break
        if cand in ELEMENTS:
            symbol = cand
            break
        if len(cand) == 1 and cand in AROMATIC_BRACKET:
            symbol, aromatic = cand.upper(), True
            break
    if symbol is None:
        raise SmilesError(f"unknown element {body[pos:pos + 2]!r}", start + 1 + pos, text)
    pos += len(symbol)

    # chirality is ignored
    if pos < len(body) and body[pos] == "@":
        while pos < len(body) and body[pos] == "@":
            pos += 1
        if body[pos : pos + 2] in ("TH", "AL", "SP", "TB", "OH"):
            pos += 2
            while pos < len(body) and body[pos].isdigit():
                pos += 1

    h_count = 0
    if pos < len(body) and body[pos] == "H":
        pos += 1
        digits = ""
        while pos < len(body) and body[pos].isdigit():
            digits += body[pos]
            pos += 1
        h_count = int(digits) if digits else 1

    charge = 0
    if pos < len(body) and body[pos] in "+-":
        sign = 1 if body[pos] == "+" else -1
        pos += 1
        digits = ""
        while pos < len(body) and body[pos].isdigit():
            digits += body[pos]
            pos += 1
        if digits:
            charge = sign * int(digits)
        else:
            charge = sign
            while pos < len(body) and body[pos] == ("+" if sign > 0 else "-"):
                charge += sign
                pos += 1

    if pos < len(body) and body[pos] == ":":  # atom class
        pos += 1
        while pos < len(body) and body[pos].isdigit():
            pos += 1
    if pos != len(body):
        raise SmilesError(f"unexpected {body[pos]!r} in bracket atom", start + 1 + pos, text)

    atom = Atom(
        element=symbol,
        formal_charge=charge,
        explicit_h=h_count,
        aromatic=aromatic,
        isotope=isotope,
        bracket=True,
    )
    return atom, end + 1


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a :class:`Molecule`.

    Raises :class:`SmilesError` carrying the character offset for unmatched
    ring closures, unbalanced parentheses, unknown elements and valence
    overflow on organic-subset atoms.
    """
    if not text or not text.strip():
        raise SmilesError("empty SMILES", 0, text)
    text = text.strip()

    atoms: list[Atom] = []
    atom_offsets: list[int] = []
    bonds: dict[tuple[int, int], int] = {}
    branch_stack: list[tuple[int, int]] = []  # (atom index, offset of '(')
    ring_open: dict[int, tuple[int, int | None, int]] = {}  # digit -> (atom, bond, offset)
    prev: int | None = None
    pending_bond: int | None = None
    i = 0
    n = len(text)

    def add_bond(a: int, b: int, order: int | None, offset: int) -> None:
        if a == b:
            raise SmilesError("self bond", offset, text)
        key = (min(a, b), max(a, b))
        if key in bonds:
            raise SmilesError("duplicate bond", offset, text)
        if order is None:
            order = AROMATIC if atoms[a].aromatic and atoms[b].aromatic else 1
        bonds[key] = order

    while i < n:
        ch = text[i]
        if ch == "(":
            if prev is None:
                raise SmilesError("branch without preceding atom", i, text)
            branch_stack.append((prev, i))
            i += 1
            continue
        if ch == ")":
            if not branch_stack:
                raise SmilesError("unbalanced parenthesis", i, text)
            if pending_bond is not None:
                raise SmilesError("dangling bond", i, text)
            prev, _ = branch_stack.pop()
            i += 1
            continue
        if ch in _BOND_SYMBOLS:
            pending_bond = _BOND_SYMBOLS[ch]
            i += 1
            continue
        if ch in "/\\":  # directional bonds carry stereo only
            if pending_bond is None:
                pending_bond = 1
            i += 1
            continue
        if ch == ".":
            if branch_stack:
                raise SmilesError("dot inside branch", i, text)
            prev = None
            pending_bond = None
            i += 1
            continue
        if ch.isdigit() or ch == "%":
            if prev is None:
                raise SmilesError("ring closure without atom", i, text)
            if ch == "%":
                digits = text[i + 1 : i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise SmilesError("bad %nn ring closure", i, text)
                digit, width = int(digits), 3
            else:
                digit, width = int(ch), 1
            if digit in ring_open:
                other, other_bond, off = ring_open.pop(digit)
                order = pending_bond if pending_bond is not None else other_bond
                if (
                    pending_bond is not None
                    and other_bond is not None
                    and pending_bond != other_bond
                ):
                    raise SmilesError("conflicting ring-closure bonds", i, text)
                add_bond(other, prev, order, i)
            else:
                ring_open[digit] = (prev, pending_bond, i)
            pending_bond = None
            i += width
            continue

        # atoms
        start = i
        if ch == "[":
            atom, i = _parse_bracket(text, i)
        elif text[i : i + 2] in ("Cl", "Br"):
            atom = Atom(element=text[i : i + 2])
            i += 2
        elif ch in ORGANIC_SUBSET:
            atom = Atom(element=ch)
            i += 1
        elif ch in AROMATIC_ORGANIC:
            atom = Atom(element=ch.upper(), aromatic=True)
            i += 1
        else:
            raise SmilesError(f"unknown element {ch!r}", i, text)
        atoms.append(atom)
        atom_offsets.append(start)
        idx = len(atoms) - 1
        if prev is not None:
            add_bond(prev, idx, pending_bond, start)
        elif pending_bond is not None:
            raise SmilesError("bond without preceding atom", start, text)
        pending_bond = None
        prev = idx

    if branch_stack:
        raise SmilesError("unbalanced parenthesis", branch_stack[-1][1], text)
    if ring_open:
        off = min(v[2] for v in ring_open.values())
        raise SmilesError("unmatched ring closure", off, text)
    if pending_bond is not None:
        raise SmilesError("dangling bond", n - 1, text)
    if not atoms:
        raise SmilesError("no atoms", 0, text)

    bond_list = [(a, b, order) for (a, b), order in bonds.items()]
    mol = Molecule(atoms=atoms, bonds=bond_list, source_text=text)
    _finish_atoms(mol, atom_offsets)
    return mol


def _finish_atoms(mol: Molecule, offsets: list[int]) -> None:
    adj = mol.adjacency
    for idx, atom in enumerate(mol.atoms):
        atom.degree = sum(1 for j, _ in adj[idx] if mol.atoms[j].element != "H")
        if atom.bracket:
            continue
        bond_sum = sum(1 if order == AROMATIC else order for _, order in adj[idx])
        if atom.aromatic:
            bond_sum += 1
        allowed = VALENCES[atom.element]
        target = next((v for v in allowed if v >= bond_sum), None)
        if target is None:
            if atom.aromatic and bond_sum - 1 <= allowed[-1]:
                target = bond_sum - 1
            else:
                raise SmilesError(
                    f"valence overflow on {atom.element}", offsets[idx], mol.source_text
                )
        atom.implicit_h = max(0, target - bond_sum)
    for idx in _ring_atoms(mol):
        mol.atoms[idx].ring_member = True


def _ring_atoms(mol: Molecule) -> set[int]:
    """Atoms lying on at least one cycle (endpoints of non-bridge bonds)."""
    adj = mol.adjacency
    n = len(mol.atoms)
    disc = [-1] * n
    low = [0] * n
    in_ring: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            node, parent, it = stack[-1]
            advanced = False
            for nb, _ in it:
                if nb == parent:
                    continue
                if disc[nb] < 0:
                    disc[nb] = low[nb] = timer
                    timer += 1
                    stack.append((nb, node, iter(adj[nb])))
                    advanced = True
                    break
                low[node] = min(low[node], disc[nb])
            if advanced:
                continue
            stack.pop()
            if parent >= 0:
                low[parent] = min(low[parent], low[node])
                if low[node] <= disc[parent]:
                    # bond parent-node is not a bridge
                    in_ring.add(node)
                    in_ring.add(parent)
    return in_ring


# ---------------------------------------------------------------------------
# fragment enumeration
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1


def _hash_ints(values) -> int:
    payload = struct.pack(f"<{len(values)}q", *values)
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def _signed(code: int) -> int:
    return code - (1 << 64) if code >= 1 << 63 else code


def initial_invariants(mol: Molecule) -> list[int]:
    """Seed codes from (element, degree, charge, total H, ring flag, aromatic flag)."""
    codes = []
    for atom in mol.atoms:
        elem = int.from_bytes(atom.element.encode().ljust(2, b"\0"), "little")
        codes.append(
            _hash_ints(
                (
                    0,
                    elem,
                    atom.degree,
                    atom.formal_charge,
                    atom.total_h,
                    int(atom.ring_member),
                    int(atom.aromatic),
                )
            )
        )
    return codes


def eccentricities(mol: Molecule) -> list[int]:
    """Graph eccentricity of every atom within its own connected component."""
    adj = mol.adjacency
    out = []
    for start in range(len(mol.atoms)):
        dist = {start: 0}
        queue = deque([start])
        far = 0
        while queue:
            u = queue.popleft()
            for v, _ in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    far = max(far, dist[v])
                    queue.append(v)
        out.append(far)
    return out


def enumerate_fragments(mol: Molecule, radius: int, molecule_id: int = 0) -> FragmentIndex:
    """One hit per atom and per radius up to ``min(radius, eccentricity)``."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    adj = mol.adjacency
    ecc = eccentricities(mol)
    codes = initial_invariants(mol)
    hits = [FragmentHit(code, 0, a) for a, code in enumerate(codes)]
    max_depth = min(radius, max(ecc, default=0))
    for depth in range(1, max_depth + 1):
        signed = [_signed(c) for c in codes]
        new_codes = []
        for a in range(len(codes)):
            env = sorted((order, signed[nb]) for nb, order in adj[a])
            flat = [depth, signed[a]]
            for order, code in env:
                flat.append(order)
                flat.append(code)
            new_codes.append(_hash_ints(flat))
        codes = new_codes
        for a, code in enumerate(codes):
            if depth <= ecc[a]:
                hits.append(FragmentHit(code, depth, a))
    return FragmentIndex(molecule_id=molecule_id, hits=hits, n_atoms=len(mol.atoms), radius=radius)


def featurize_smiles(smiles: list[str], radius: int) -> list[FragmentIndex]:
    return [enumerate_fragments(parse_smiles(s), radius, i) for i, s in enumerate(smiles)]
