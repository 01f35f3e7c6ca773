"""Braid-group action on generators, root vectors, and Casimir machinery.

The braid generators act as algebra maps on a small formal layer of
noncommutative words in the symbols e_i, f_i, K_i^r.  Images of words are
composed formally (denominators are kept as multisets of q-binomial atoms)
and only evaluated into a representation at the end, where every division
is performed exactly and checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .posrep import Rep, RelationReport, UnsupportedRepError
from .weylalg import (BL, BS, MOM, POS, ExponentForm, Monomial, OpElement,
                      PhaseCoefficient, PhaseExponent, PositivityCertificate,
                      SubstitutionError, gb_conjugate,
                      manifest_positivity_certificate, phase,
                      substitute_linear)

Q = Fraction

__all__ = [
    "FormalOp", "Evaluator", "sym_e", "sym_f", "sym_K",
    "apply_T", "t_image", "eij_formal", "e_ij",
    "check_braid_relations", "root_vectors", "RootVector",
    "casimir", "casimir_normal_form", "NormalFormStep",
    "plancherel_density",
]


def sym_e(i: int):
    return ("e", i)


def sym_f(i: int):
    return ("f", i)


def sym_K(i: int, r=1):
    return ("K", i, Q(r))


def _canon_word(word):
    """Merge and sort adjacent K powers (K's commute among themselves)."""
    out: list = []
    for sym in word:
        if sym[0] != "K":
            out.append(sym)
            continue
        if sym[2] == 0:
            continue
        j = len(out)
        while j > 0 and out[j - 1][0] == "K" and out[j - 1][1] > sym[1]:
            j -= 1
        if j > 0 and out[j - 1][0] == "K" and out[j - 1][1] == sym[1]:
            r = out[j - 1][2] + sym[2]
            out.pop(j - 1)
            if r:
                out.insert(j - 1, ("K", sym[1], r))
        else:
            out.insert(j, sym)
    return tuple(out)


class FormalOp:
    """Finite sum of words with exact scalar numerators over a common
    denominator kept as a multiset of q-binomial atoms (s, k) standing for
    (q^k - q^{-k}) at q = e^{i pi s}."""

    __slots__ = ("terms", "den")

    def __init__(self, terms=None, den=()):
        self.terms = {}
        for w, c in (terms or {}).items():
            if not c.is_zero:
                w = _canon_word(w)
                cur = self.terms.get(w)
                self.terms[w] = c if cur is None else cur + c
        self.terms = {w: c for w, c in self.terms.items() if not c.is_zero}
        self.den = tuple(sorted(den))

    @classmethod
    def from_symbol(cls, sym, coeff: PhaseCoefficient | None = None):
        return cls({(sym,): coeff if coeff is not None else
                    PhaseCoefficient.rational(1)})

    @classmethod
    def one(cls):
        return cls({(): PhaseCoefficient.rational(1)})

    def times_coeff(self, c: PhaseCoefficient) -> "FormalOp":
        return FormalOp({w: v * c for w, v in self.terms.items()}, self.den)

    def over_atom(self, s: PhaseExponent, k: int) -> "FormalOp":
        return FormalOp(self.terms, self.den + ((tuple(s), k),))

    def __neg__(self):
        return FormalOp({w: -v for w, v in self.terms.items()}, self.den)

    def __add__(self, other: "FormalOp") -> "FormalOp":
        if self.den == other.den:
            t = dict(self.terms)
            for w, v in other.terms.items():
                t[w] = t.get(w, PhaseCoefficient()) + v
            return FormalOp(t, self.den)
        lcm = _atoms_lcm(self.den, other.den)
        scale_self = _atoms_value(_atoms_diff(lcm, self.den))
        scale_other = _atoms_value(_atoms_diff(lcm, other.den))
        t = {w: v * scale_self for w, v in self.terms.items()}
        for w, v in other.terms.items():
            vv = v * scale_other
            t[w] = t.get(w, PhaseCoefficient()) + vv
        return FormalOp(t, lcm)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: "FormalOp") -> "FormalOp":
        t: dict = {}
        for w1, v1 in self.terms.items():
            for w2, v2 in other.terms.items():
                w = _canon_word(w1 + w2)
                c = v1 * v2
                t[w] = t.get(w, PhaseCoefficient()) + c
        return FormalOp(t, self.den + other.den)

    def __len__(self):
        return len(self.terms)


def _atoms_value(atoms) -> PhaseCoefficient:
    out = PhaseCoefficient.rational(1)
    for s, k in atoms:
        se = PhaseExponent(s)
        out = out * (phase(se.scaled(k)) - phase(se.scaled(-k)))
    return out


def _atoms_lcm(a, b):
    from collections import Counter
    ca, cb = Counter(a), Counter(b)
    out = []
    for atom in set(ca) | set(cb):
        out.extend([atom] * max(ca[atom], cb[atom]))
    return tuple(sorted(out))


def _atoms_diff(a, b):
    from collections import Counter
    ca = Counter(a)
    ca.subtract(Counter(b))
    out = []
    for atom, mult in ca.items():
        if mult < 0:
            raise ValueError("atom multiset difference went negative")
        out.extend([atom] * mult)
    return tuple(sorted(out))


def normalize_word(rep: Rep, word: tuple):
    """Move every K power to the right end of the word, collecting the
    exact commutation phase (K_i^r x_j = q_i^{+- r a_ij} x_j K_i^r).

    Returns (phase exponent, ef-core word, K-tail word).
    """
    theta = PhaseExponent()
    core: list = []
    ks: dict = {}
    for sym in reversed(word):
        if sym[0] != "K":
            core.append(sym)
            continue
        # push K_i^r rightward past every core symbol collected so far
        i, r = sym[1], sym[2]
        for s2 in core:
            a = rep.amat[i][s2[1]]
            if a:
                s = rep.q_exp[i].scaled(r * a)
                theta = theta + (s if s2[0] == "e" else -s)
        ks[i] = ks.get(i, Q(0)) + r
    core.reverse()
    tail = tuple(("K", i, r) for i, r in sorted(ks.items()) if r)
    return theta, tuple(core), tail


class Evaluator:
    """Evaluates formal words into a representation.

    Words are normalised so that all K powers sit at the right end; the
    e/f cores are evaluated with prefix caching and the K tail is a single
    cheap monomial.
    """

    def __init__(self, rep: Rep):
        self.rep = rep
        self._cache: dict = {(): OpElement.unit()}

    def symbol(self, sym) -> OpElement:
        kind = sym[0]
        if kind == "e":
            if sym[1] not in self.rep.e:
                raise UnsupportedRepError(f"e_{sym[1] + 1} not available")
            return self.rep.e[sym[1]]
        if kind == "f":
            return self.rep.f[sym[1]]
        if kind == "K":
            return self.rep.K_power(sym[1], sym[2])
        raise ValueError(f"unknown symbol {sym!r}")

    def _core(self, w: tuple) -> OpElement:
        got = self._cache.get(w)
        if got is not None:
            return got
        k = len(w) - 1
        while k > 0 and w[:k] not in self._cache:
            k -= 1
        cur = self._cache[w[:k]]
        for j in range(k, len(w)):
            cur = cur * self.symbol(w[j])
            self._cache[w[:j + 1]] = cur
        return cur

    def word(self, w: tuple) -> OpElement:
        theta, core, tail = normalize_word(self.rep, w)
        out = self._core(core)
        for sym in tail:
            out = out * self.symbol(sym)
        if not theta.is_zero:
            out = out.times_phase(theta)
        return out

    def eval(self, fop: FormalOp) -> OpElement:
        # merge words sharing an e/f core before evaluating
        grouped: dict = {}
        for w, c in fop.terms.items():
            theta, core, tail = normalize_word(self.rep, w)
            key = (core, tail)
            cc = c.times_phase(theta)
            cur = grouped.get(key)
            grouped[key] = cc if cur is None else cur + cc
        total = OpElement.zero()
        for (core, tail), c in grouped.items():
            if c.is_zero:
                continue
            out = self._core(core)
            for sym in tail:
                out = out * self.symbol(sym)
            total = total + out.times_coeff(c)
        for s, k in fop.den:
            se = PhaseExponent(s)
            total = total.divide_coeff(phase(se.scaled(k))
                                       - phase(se.scaled(-k)))
        return total


# ---------------------------------------------------------------------------
# the braid action tables
# ---------------------------------------------------------------------------

def eij_formal(rep: Rep, i: int, j: int, kind: str = "e") -> FormalOp:
    """Iterated q-commutator combination for the non-simple root i + j:

        (-1)^{a_ij} [x_i, ... [x_i, x_j]_{q_i^{a_ij/2}} ...]_{q_i^{(-a_ij-2)/2}}
            / prod_{k=1}^{-a_ij} (q_i^k - q_i^{-k}).
    """
    a = rep.amat[i][j]
    if a >= 0:
        raise ValueError("nodes must be adjacent")
    qi = rep.q_exp[i]
    xi = FormalOp.from_symbol((kind, i))
    com = FormalOp.from_symbol((kind, j))
    for m in range(-a):
        s = qi.scaled(Q(a, 2) + m)
        com = (xi * com).times_coeff(phase(s)) \
            - (com * xi).times_coeff(phase(-s))
    if a % 2:
        com = -com
    for k in range(1, -a + 1):
        com = com.over_atom(qi, k)
    return com


def t_image(rep: Rep, i: int, sym) -> FormalOp:
    """Image of a single generator symbol under the braid map T_i."""
    kind = sym[0]
    qi = rep.q_exp[i]
    if kind == "K":
        j, r = sym[1], sym[2]
        return FormalOp({_canon_word((sym, ("K", i, -rep.amat[i][j] * r))):
                         PhaseCoefficient.rational(1)})
    j = sym[1]
    if j == i:
        if kind == "e":
            # T_i(e_i) = q_i f_i K_i^{-1}
            return FormalOp({(("f", i), ("K", i, Q(-1))): phase(qi)})
        # T_i(f_i) = q_i e_i K_i
        return FormalOp({(("e", i), ("K", i, Q(1))): phase(qi)})
    if rep.amat[i][j] == 0:
        return FormalOp.from_symbol(sym)
    return eij_formal(rep, i, j, kind)


def apply_T(rep: Rep, i: int, x) -> FormalOp:
    """Extend T_i multiplicatively over a formal operator (or one symbol)."""
    if isinstance(x, tuple):
        x = FormalOp.from_symbol(x)
    out = FormalOp({})
    for w, c in x.terms.items():
        img = FormalOp({(): c})
        for sym in w:
            img = img * t_image(rep, i, sym)
        out = out + img
    return FormalOp(out.terms, out.den + x.den)


def apply_T_word(rep: Rep, word, x) -> FormalOp:
    """T_{word[0]} T_{word[1]} ... (x): the rightmost letter acts first."""
    if isinstance(x, tuple):
        x = FormalOp.from_symbol(x)
    for s in reversed(tuple(word)):
        x = apply_T(rep, s, x)
    return x


def e_ij(rep: Rep, i: int, j: int, kind: str = "e") -> OpElement:
    """Evaluated non-simple root generator, with its positivity certificate
    checked at q_i."""
    ev = Evaluator(rep)
    out = ev.eval(eij_formal(rep, i, j, kind))
    manifest_positivity_certificate(out, rep.q_exp[i])
    return out


def check_braid_relations(rep: Rep) -> RelationReport:
    """T_i T_j T_i ... = T_j T_i T_j ... (m_ij letters) on every available
    generator, as exact equality of evaluated operators."""
    report = RelationReport(f"braid relations [{rep.name}]")
    ev = Evaluator(rep)
    n = rep.cartan.rank
    gens = ([sym_e(i) for i in rep.available_e()]
            + [sym_f(i) for i in range(n)]
            + [sym_K(i) for i in range(n)])
    for i in range(n):
        for j in range(i + 1, n):
            m = rep.cartan.coxeter_m(i, j)
            seq1 = tuple(i if k % 2 == 0 else j for k in range(m))
            seq2 = tuple(j if k % 2 == 0 else i for k in range(m))
            for g in gens:
                lhs = ev.eval(apply_T_word(rep, seq1, g))
                rhs = ev.eval(apply_T_word(rep, seq2, g))
                report.add(f"T-braid({i+1},{j+1}) on {g[0]}{g[1]+1}",
                           lhs - rhs)
    return report


# ---------------------------------------------------------------------------
# root vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootVector:
    """Positive root vector pair with its certificates."""
    root: tuple
    letter: int
    e: OpElement
    f: OpElement
    e_cert: PositivityCertificate
    f_cert: PositivityCertificate


def root_vectors(rep: Rep, word) -> list[RootVector]:
    """e and f vectors for every positive root of the reduced word,
    e_{alpha_k} = T_{i_1} ... T_{i_{k-1}} e_{i_k}, each certified at the q
    of its root length."""
    from .rootdata import ReducedWord, word_roots
    letters = tuple(word.letters if isinstance(word, ReducedWord) else word)
    roots = word_roots(rep.cartan, ReducedWord(letters))
    ev = Evaluator(rep)
    out = []
    for k, letter in enumerate(letters):
        prefix = letters[:k]
        q_root = rep.q_exp[letter]
        ee = ev.eval(apply_T_word(rep, prefix, sym_e(letter)))
        ff = ev.eval(apply_T_word(rep, prefix, sym_f(letter)))
        ce = manifest_positivity_certificate(ee, q_root)
        cf = manifest_positivity_certificate(ff, q_root)
        out.append(RootVector(roots[k], letter, ee, ff, ce, cf))
    return out


# ---------------------------------------------------------------------------
# Casimir element and its scripted diagonalization
# ---------------------------------------------------------------------------

def casimir(rep: Rep, i: int) -> OpElement:
    """Rescaled Casimir  f_i e_i - q_i K_i - K_i^{-1}/q_i  of the rank-1
    subalgebra at node i; commutes exactly with e_i, f_i, K_i."""
    if i not in rep.e:
        raise UnsupportedRepError(f"e_{i+1} not available")
    qi = rep.q_exp[i]
    return (rep.f[i] * rep.e[i]
            - rep.K[i].times_phase(qi)
            - rep.K[i].inverse().times_phase(-qi))


@dataclass
class NormalFormStep:
    """One verified move of the Casimir diagonalization chain."""
    kind: str            # "gb" or "subst"
    description: str
    data: dict
    before: OpElement
    after: OpElement


def _monomial_positions(m: Monomial) -> ExponentForm:
    return ExponentForm({k: v for k, v in m.form.items() if k[1] == POS})


def _collapse_pass(rep: Rep, i: int, x: OpElement, steps: list) -> OpElement:
    """Repeatedly strip q^2-paired partners by dilogarithm conjugations.

    A pair (U, C) with C = q^{-1} U W for a single positive exponential W
    collapses to U under g*(W) . g(W); the argument W is read off from the
    exponent difference of the pair.
    """
    qi = rep.q_exp[i]
    while True:
        cross = [m for m in x.terms if any(k[1] == MOM for k, _ in m.form.items())]
        if len(cross) <= 1:
            return x
        done = False
        for ma in cross:
            for mb in cross:
                if ma is mb or ma.form == mb.form:
                    continue
                diff = mb.form - ma.form
                if any(k[1] == MOM for k, _ in diff.items()):
                    continue   # pair must differ by a position-only factor
                arg = OpElement.exponential(diff)
                try:
                    new, transcript = gb_conjugate(
                        x, arg, qi, "inverse", per_monomial=True,
                        check_certificates=False)
                except Exception:
                    continue
                if len(new) < len(x):
                    steps.append(NormalFormStep(
                        "gb", f"conjugate by g*(exp(pi({diff!r}))) . g(.)",
                        {"argument": arg, "side": "inverse",
                         "rules": [s.rule for s in transcript]},
                        x, new))
                    x = new
                    done = True
                    break
            if done:
                break
        if not done:
            return x


def plancherel_density(gamma: float, b_i: float, params=None) -> float:
    """Spectral density |S_b(Q + 2 gamma)|^2 of the Casimir diagonalization
    at the given node scale, evaluated numerically."""
    from . import qdilog
    if params is None:
        params = qdilog.QDilogParams(b=b_i)
    val = qdilog.S_b(params.Q + 2 * gamma, params)
    return abs(val) ** 2


def _scale_ratio(sym, scale) -> Q:
    """Coefficient as a rational multiple of the node scale symbol."""
    if sym.is_zero:
        return Q(0)
    for a, b in zip(sym, scale):
        if b:
            return a / b
    raise UnsupportedRepError("coordinate scale mismatch in normal form")


def _split_form(form: ExponentForm, scale):
    pos, lam, mom = {}, {}, {}
    for (label, ax), v in form.items():
        r = _scale_ratio(v, scale)
        if ax == MOM:
            mom[label] = r
        elif label.startswith("lam"):
            lam[label] = r
        else:
            pos[label] = r
    return pos, lam, mom


def _apply_subst(x, mapping, label, steps):
    new = substitute_linear(x, mapping)
    steps.append(NormalFormStep(
        "subst", label,
        {"mapping": {f"{k[0]}|{k[1]}":
                     {f"{kk[0]}|{kk[1]}": str(vv) for kk, vv in v.items()}
                     for k, v in mapping.items()}},
        x, new))
    return new


def casimir_normal_form(rep: Rep, i: int):
    """Scripted diagonalization of the node-i Casimir.

    Dilogarithm conjugations strip the paired cross terms down to a single
    momentum-carrying exponential, then three exact symplectic
    substitutions (a symmetric momentum shear, a position shear, a
    momentum combination) land exactly on

        exp(2 pi b_i u) + exp(-2 pi b_i u) + exp(2 pi b_i p)

    in the distinguished coordinate u of the leftmost occurrence of the
    letter.  Every step logs its verified data and is re-checkable.

    When letter i occurs only once the Casimir is already the constant
    2 cosh of the weight form; the chain is empty.
    """
    steps: list[NormalFormStep] = []
    c = casimir(rep, i)
    if rep.word.letters.count(i) < 2:
        return c, steps
    x = _collapse_pass(rep, i, c, steps)
    cross = [m for m in x.terms if any(k[1] == MOM for k, _ in m.form.items())]
    cosh = [m for m in x.terms if not any(k[1] == MOM
                                           for k, _ in m.form.items())]
    if len(cross) != 1 or len(cosh) != 2:
        raise UnsupportedRepError(
            f"collapse pass left {len(cross)} cross terms; the normal-form "
            f"script supports the rank-2 terminal-letter case")
    scale = rep.node_scale(i)
    target_label = rep.labels[rep.word.letters.index(i)]

    # 1. symmetric momentum shear: cancel the position and parameter part
    #    of the cross term (p_k -> p_k + S_k. x + s_k lam, S symmetric).
    pos0, lam0, mom0 = _split_form(cross[0].form, scale)
    pivot = sorted(mom0)[0]
    mapping: dict = {}
    for mlab in mom0:
        img = {(mlab, MOM): Q(1)}
        own = pos0.pop(mlab, Q(0))
        if own:
            img[(mlab, POS)] = -own / mom0[mlab]
        mapping[(mlab, MOM)] = img
    for plab, val in list(pos0.items()):
        if not val:
            continue
        entry = -val / mom0[pivot]
        mapping[(pivot, MOM)][(plab, POS)] = entry
        # symmetric partner keeps the shear symplectic
        part = mapping.setdefault((plab, MOM), {(plab, MOM): Q(1)})
        part[(pivot, POS)] = entry
    for llab, val in lam0.items():
        if val:
            mapping[(pivot, MOM)][(llab, POS)] = -val / mom0[pivot]
    x = _apply_subst(x, mapping, "momentum shear (strip cross positions)",
                     steps)

    # 2. position shear: cosh argument -> 2 * target coordinate.
    plus_form = cosh[0].form
    pos1, lam1, _ = _split_form(plus_form, scale)
    if pos1.get(target_label, Q(0)) < 0:
        pos1 = {k: -v for k, v in pos1.items()}
        lam1 = {k: -v for k, v in lam1.items()}
    at = pos1.get(target_label, Q(0))
    if at != 2:
        raise UnsupportedRepError("cosh argument does not carry the "
                                  "distinguished coordinate with weight 2")
    img = {(target_label, POS): Q(1)}
    mapping = {(target_label, POS): img}
    for plab, val in pos1.items():
        if plab == target_label or not val:
            continue
        img[(plab, POS)] = -val / at
        # momentum partner: p_j -> p_j + (val/at) p_target
        mapping[(plab, MOM)] = {(plab, MOM): Q(1),
                                (target_label, MOM): val / at}
    for llab, val in lam1.items():
        if val:
            img[(llab, POS)] = -val / at
    x = _apply_subst(x, mapping, "position shear (normalise cosh argument)",
                     steps)

    # 3. momentum combination: cross momentum part -> 2 p_target.
    cross_now = [m for m in x.terms
                 if any(k[1] == MOM for k, _ in m.form.items())][0]
    _, _, mom2 = _split_form(cross_now.form, scale)
    ct = mom2.get(target_label, Q(0))
    if ct != 2:
        raise UnsupportedRepError("cross momentum does not carry the "
                                  "distinguished momentum with weight 2")
    img = {(target_label, MOM): Q(1)}
    mapping = {(target_label, MOM): img}
    for mlab, val in mom2.items():
        if mlab == target_label or not val:
            continue
        img[(mlab, MOM)] = -val / ct
        # position partner: x_j -> x_j + (val/ct) x_target
        mapping[(mlab, POS)] = {(mlab, POS): Q(1),
                                (target_label, POS): val / ct}
    x = _apply_subst(x, mapping, "momentum combination (isolate p)", steps)

    two = scale.scaled(2)
    target = (OpElement.exponential(ExponentForm({(target_label, POS): two}))
              + OpElement.exponential(ExponentForm({(target_label, POS):
                                                    -two}))
              + OpElement.exponential(ExponentForm({(target_label, MOM):
                                                    two})))
    if not x == target:
        raise UnsupportedRepError(
            "normal-form substitutions missed the target element")
    return x, steps
