"""Cartan matrices, root systems, and reduced words for the longest element.

Roots are integer coordinate vectors in the simple-root basis, so all
reflection arithmetic is exact.  Types A, B, C, D are fully supported;
G2 data can be constructed but is rejected by the representation layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

Q = Fraction

__all__ = [
    "CartanData", "ReducedWord", "ConfigurationError", "InvalidMoveError",
    "cartan_data", "longest_word", "braid_move", "word_roots",
    "simple_reflection", "is_reduced",
]


class ConfigurationError(ValueError):
    """Unsupported Cartan type or rank."""


class InvalidMoveError(ValueError):
    """Braid move pattern does not match the word at the given position."""


@dataclass(frozen=True)
class CartanData:
    """Cartan matrix with root-length data.

    ``matrix[i][j]`` is a_ij = 2(alpha_i, alpha_j)/(alpha_i, alpha_i);
    ``halfnorms[i]`` is (alpha_i, alpha_i)/2, which is 1 for long (or
    simply-laced) nodes and 1/2 for short nodes in types B, C (1/3 in G2);
    ``node_scale[i]`` is "l" or "s" accordingly.
    """
    type: str
    rank: int
    matrix: tuple
    halfnorms: tuple
    node_scale: tuple

    def is_short(self, i: int) -> bool:
        return self.node_scale[i] == "s"

    @property
    def simply_laced(self) -> bool:
        return all(s == "l" for s in self.node_scale)

    def coxeter_m(self, i: int, j: int) -> int:
        """Order of s_i s_j in the Weyl group."""
        prod = self.matrix[i][j] * self.matrix[j][i]
        return {0: 2, 1: 3, 2: 4, 3: 6}[prod]


def _adjacency(type_: str, rank: int):
    """Edges of the Dynkin diagram, plus the short-node set."""
    edges = [(i, i + 1) for i in range(rank - 1)]
    short: set = set()
    if type_ == "A":
        pass
    elif type_ == "B":
        # alpha_1 is the short root
        short = {0}
    elif type_ == "C":
        # alpha_1 is the long root; the others are short
        short = set(range(1, rank))
    elif type_ == "D":
        if rank < 3:
            raise ConfigurationError("type D needs rank >= 3")
        edges = [(i, i + 1) for i in range(rank - 2)] + [(rank - 3, rank - 1)]
    elif type_ == "G":
        if rank != 2:
            raise ConfigurationError("type G needs rank 2")
        short = {1}
    else:
        raise ConfigurationError(f"unsupported type {type_!r}")
    return edges, short


def cartan_data(type_: str, rank: int) -> CartanData:
    """Cartan data for the given type and rank.

    a_ij is reproduced from the half-norms together with the adjacency rule
    (alpha_i, alpha_j) = -1; the result is symmetrizable by construction.
    """
    type_ = type_.upper()
    if rank < 1 or (type_ in "BC" and rank < 2):
        raise ConfigurationError(f"unsupported rank {rank} for type {type_}")
    edges, short = _adjacency(type_, rank)
    third = type_ == "G"
    halfnorms = tuple(Q(1, 3) if (third and i in short)
                      else Q(1, 2) if i in short else Q(1)
                      for i in range(rank))
    adj = {(i, j) for i, j in edges} | {(j, i) for i, j in edges}
    matrix = []
    for i in range(rank):
        row = []
        for j in range(rank):
            if i == j:
                row.append(2)
            elif (i, j) in adj:
                aij = Q(-1) / halfnorms[i]
                if aij.denominator != 1:
                    raise ConfigurationError("non-integer Cartan entry")
                row.append(int(aij))
            else:
                row.append(0)
        matrix.append(tuple(row))
    scales = tuple("s" if i in short else "l" for i in range(rank))
    data = CartanData(type_, rank, tuple(matrix), halfnorms, scales)
    for i in range(rank):
        for j in range(rank):
            if halfnorms[i] * matrix[i][j] != halfnorms[j] * matrix[j][i]:
                raise ConfigurationError("Cartan matrix is not symmetrizable")
    return data


@dataclass(frozen=True)
class ReducedWord:
    """Word in the simple reflections, stored as 0-based node indices."""
    letters: tuple

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)


def simple_reflection(cartan: CartanData, i: int, root: tuple) -> tuple:
    """s_i(root) in simple-root coordinates: beta - <beta, alpha_i^v> alpha_i."""
    pairing = sum(cartan.matrix[i][j] * root[j] for j in range(cartan.rank))
    out = list(root)
    out[i] -= pairing
    return tuple(out)


def positive_roots(cartan: CartanData) -> list[tuple]:
    """All positive roots, generated by closing the simple roots under
    reflections."""
    n = cartan.rank
    simples = [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
    seen = set(simples)
    frontier = list(simples)
    while frontier:
        nxt = []
        for r in frontier:
            for i in range(n):
                img = simple_reflection(cartan, i, r)
                if all(c >= 0 for c in img) and img not in seen:
                    seen.add(img)
                    nxt.append(img)
        frontier = nxt
    return sorted(seen)


def _act(cartan: CartanData, word, root: tuple) -> tuple:
    """Apply s_{i_1} ... s_{i_k} (leftmost acts last) to a root."""
    for i in reversed(tuple(word)):
        root = simple_reflection(cartan, i, root)
    return root


def is_reduced(cartan: CartanData, word: ReducedWord) -> bool:
    """A word is reduced iff its root sequence consists of distinct
    positive roots."""
    seen = set()
    for k in range(len(word.letters)):
        prefix = word.letters[:k]
        alpha = tuple(1 if j == word.letters[k] else 0
                      for j in range(cartan.rank))
        r = _act(cartan, prefix, alpha)
        if any(c < 0 for c in r) or r in seen:
            return False
        seen.add(r)
    return True


def longest_word(cartan: CartanData) -> ReducedWord:
    """Deterministic reduced word for the longest Weyl-group element.

    Greedy construction: at each step append the lexicographically least
    letter i whose simple root still has a positive image under the word
    built so far.
    """
    n = cartan.rank
    simples = [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
    letters: list[int] = []
    npos = len(positive_roots(cartan))
    while len(letters) < npos:
        for i in range(n):
            if all(c >= 0 for c in _act(cartan, letters, simples[i])):
                letters.append(i)
                break
        else:
            raise ConfigurationError("longest-word construction stalled")
    word = ReducedWord(tuple(letters))
    for r in positive_roots(cartan):
        if not all(c <= 0 for c in _act(cartan, word.letters, r)):
            raise ConfigurationError("longest-element certificate failed")
    return word


def braid_move(cartan: CartanData, word: ReducedWord,
               position: int) -> ReducedWord:
    """Replace the alternating block s_i s_j s_i ... of length m_ij starting
    at ``position`` by s_j s_i s_j ...; the result is still reduced."""
    letters = word.letters
    if position < 0 or position + 2 > len(letters):
        raise InvalidMoveError("position out of range")
    i, j = letters[position], letters[position + 1]
    if i == j:
        raise InvalidMoveError("equal letters cannot start a braid block")
    m = cartan.coxeter_m(i, j)
    if position + m > len(letters):
        raise InvalidMoveError(f"word too short for an m={m} block")
    expected = tuple(i if k % 2 == 0 else j for k in range(m))
    if letters[position:position + m] != expected:
        raise InvalidMoveError(
            f"letters at {position} do not alternate with period m={m}")
    replacement = tuple(j if k % 2 == 0 else i for k in range(m))
    new = ReducedWord(letters[:position] + replacement
                      + letters[position + m:])
    if not is_reduced(cartan, new):
        raise InvalidMoveError("braid move produced a non-reduced word")
    return new


def word_roots(cartan: CartanData, word: ReducedWord) -> list[tuple]:
    """Root sequence alpha_k = s_{i_1} ... s_{i_{k-1}} (alpha_{i_k}).

    For a reduced word for the longest element this enumerates every
    positive root exactly once.
    """
    out = []
    for k, letter in enumerate(word.letters):
        alpha = tuple(1 if j == letter else 0 for j in range(cartan.rank))
        out.append(_act(cartan, word.letters[:k], alpha))
    return out


def root_halfnorm(cartan: CartanData, root: tuple) -> Q:
    """(beta, beta)/2 of a root in simple-root coordinates."""
    n = cartan.rank
    total = Q(0)
    for i in range(n):
        for j in range(n):
            # (alpha_i, alpha_j) = a_ij * (alpha_i, alpha_i)/2
            total += root[i] * root[j] * cartan.matrix[i][j] * cartan.halfnorms[i]
    return total / 2
