"""Seeded exact-arithmetic identity checks for the Weyl algebra and the Fedosov connection.

Every check draws random instances with Gaussian-rational coefficients, runs
them in exact mode and reports the largest residual coefficient inside the
validity caps.  A correct implementation gives exactly zero.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .bargmann_fock import bf_action
from .fedosov import (
    apply_D_BT,
    assemble_I_BT,
    flat_section_of_function,
    required_m_cut,
    star_product,
)
from .geometry import GeometryModel, geometry_at, poisson_bracket
from .jets import ChartJet, gaussian
from .weyl import (
    WeylElement,
    WeylForm,
    delta,
    delta01,
    delta10,
    delta_inv01,
    delta_inv10,
    level_k_wick,
    pi01,
    pi10,
    symbol,
    wick_product,
)

CHECKS = (
    "wick_associativity",
    "delta_homotopy",
    "d_bt_squared",
    "flat_section",
    "module_property",
    "star_poisson",
)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one identity over a batch of seeded random instances."""

    name: str
    geometry: str
    instances: int
    max_residual: float

    @property
    def exact_zero(self) -> bool:
        return self.max_residual == 0.0


def random_gaussian(rng: random.Random, size: int = 5):
    """A small Gaussian rational ``p/q + sqrt(-1) r/s``."""
    return gaussian(
        Fraction(rng.randint(-size, size), rng.randint(1, 4)),
        Fraction(rng.randint(-size, size), rng.randint(1, 4)),
    )


def exact_geometry(name: str, rng: random.Random, order: int, n: int = 1) -> GeometryModel:
    """An exact-mode geometry at a random Gaussian-rational chart point."""
    pts = [[gaussian(Fraction(rng.randint(-3, 3), 4), Fraction(rng.randint(-3, 3), 4))] for _ in range(n)]
    return geometry_at(name, pts, order, exact_mode=True, n=n)


def random_coefficient(rng: random.Random, geom: GeometryModel | None, n: int) -> ChartJet:
    """A constant, or (given a geometry) a random polynomial in ``z`` and ``zbar``."""
    const = ChartJet.constant(n, random_gaussian(rng), True)
    if geom is None:
        return const
    out = const
    for i in range(n):
        z = geom.coordinate(i)
        zb = geom.coordinate(i, conj=True)
        out = out + z * ChartJet.constant(n, random_gaussian(rng), True)
        out = out + zb * zb * ChartJet.constant(n, random_gaussian(rng), True)
    return out


def random_element(
    rng: random.Random,
    n: int,
    w_max: int,
    d_max: int,
    n_terms: int = 4,
    geom: GeometryModel | None = None,
    fock: bool = False,
) -> WeylElement:
    """A complete random element of weight ``<= w_max`` and y-degree ``<= d_max``.

    ``fock=True`` returns a polynomial in ``y`` only.
    """
    terms: dict = {}
    for _ in range(n_terms):
        if fock:
            r, b = 0, (0,) * n
        else:
            r = rng.randint(0, min(1, w_max))
            b = _random_multi_index(rng, n, rng.randint(0, w_max - r))
        a = _random_multi_index(rng, n, rng.randint(0, d_max))
        key = (r, a, b)
        c = random_coefficient(rng, geom, n)
        terms[key] = terms[key] + c if key in terms else c
    return WeylElement(n, terms)


def _random_multi_index(rng: random.Random, n: int, degree: int) -> tuple[int, ...]:
    out = [0] * n
    for _ in range(degree):
        out[rng.randrange(n)] += 1
    return tuple(out)


def _residual(x) -> float:
    return float(x.max_abs())


# ---------------------------------------------------------------------------
# individual identities


def wick_associativity(rng: random.Random, geom: GeometryModel, w_max: int) -> float:
    """``(a * b) * c - a * (b * c)`` with the fibre metric of ``geom``."""
    n = geom.n
    a, b, c = (random_element(rng, n, w_max, w_max) for _ in range(3))
    metric = geom.fiber
    lhs = wick_product(wick_product(a, b, metric), c, metric)
    rhs = wick_product(a, wick_product(b, c, metric), metric)
    return _residual(lhs - rhs)


def delta_homotopy(rng: random.Random, geom: GeometryModel, w_max: int) -> float:
    """Koszul identities on elements and one-forms.

    ``delta^2 = 0``, ``delta^{1,0} delta^{0,1} + delta^{0,1} delta^{1,0} = 0`` and
    ``delta delta^{-1} + delta^{-1} delta + pi = id`` for both types.
    """
    n = geom.n
    a = random_element(rng, n, w_max, w_max)
    worst = 0.0
    worst = max(worst, _residual(delta(delta(a))))
    worst = max(worst, _residual(delta10(delta01(a)) + delta01(delta10(a))))
    for d, dinv, pi in ((delta10, delta_inv10, pi10), (delta01, delta_inv01, pi01)):
        back = dinv(d(a))
        back = back.as_element() if isinstance(back, WeylForm) else back
        worst = max(worst, _residual(back + pi(a).as_element() - a))
        gen = rng.randrange(2 * n)
        phi = WeylForm.basis(random_element(rng, n, w_max, w_max), [gen])
        lhs = _as_form(d(dinv(phi))) + _as_form(dinv(d(phi))) + pi(phi)
        worst = max(worst, _residual(lhs - phi))
    return worst


def _as_form(x) -> WeylForm:
    return x if isinstance(x, WeylForm) else WeylForm.from_element(x)


def d_bt_squared(rng: random.Random, geom: GeometryModel, w_max: int) -> float:
    """``D_BT(D_BT a)`` inside the validity caps for a random element with polynomial coefficients."""
    F = assemble_I_BT(geom, required_m_cut(w_max, w_max), w_max=w_max)
    a = random_element(rng, geom.n, w_max, w_max, geom=geom)
    return _residual(apply_D_BT(F, apply_D_BT(F, a)))


def flat_section(rng: random.Random, geom: GeometryModel, w_max: int) -> float:
    """``D_BT O_f`` inside the caps and ``sigma(O_f) - f`` for a random polynomial ``f``."""
    F = assemble_I_BT(geom, required_m_cut(w_max, w_max), w_max=w_max)
    f = random_coefficient(rng, geom, geom.n)
    O = flat_section_of_function(f, F, w_max, d_cap=w_max)
    sym = symbol(O.element)
    worst = _residual(apply_D_BT(F, O.element))
    worst = max(worst, float((sym[0] - f).max_abs()))
    for r, c in sym.items():
        if r > 0:
            worst = max(worst, float(c.max_abs()))
    return worst


def module_property(rng: random.Random, geom: GeometryModel, w_max: int) -> float:
    """``(alpha *_k beta) (*)_k v - alpha (*)_k (beta (*)_k v)`` for finite-weight ``alpha, beta``."""
    n = geom.n
    k = rng.randint(1, 12)
    alpha = random_element(rng, n, w_max, w_max)
    beta = random_element(rng, n, w_max, w_max)
    v = random_element(rng, n, 0, w_max + 2, fock=True)
    metric = geom.fiber
    lhs = bf_action(level_k_wick(alpha, beta, k, metric), v, k, metric)
    rhs = bf_action(alpha, bf_action(beta, v, k, metric), k, metric)
    return _residual(lhs - rhs)


def star_poisson(rng: random.Random, geom: GeometryModel, w_max: int) -> float:
    """``C_0(f, g) - fg`` and ``C_1(f, g) - C_1(g, f) - {f, g}`` for random polynomial ``f, g``."""
    F = assemble_I_BT(geom, required_m_cut(w_max, w_max), w_max=w_max)
    f = random_coefficient(rng, geom, geom.n)
    g = random_coefficient(rng, geom, geom.n)
    fg = star_product(f, g, F, 1)
    gf = star_product(g, f, F, 1)
    worst = float((fg[0] - f * g).max_abs())
    return max(worst, float((fg[1] - gf[1] - poisson_bracket(geom, f, g)).max_abs()))


_IDENTITIES = {
    "wick_associativity": wick_associativity,
    "delta_homotopy": delta_homotopy,
    "d_bt_squared": d_bt_squared,
    "flat_section": flat_section,
    "module_property": module_property,
    "star_poisson": star_poisson,
}


def run_check(name: str, geometry: str, instances: int, seed: int, w_max: int = 3, n: int = 1) -> CheckResult:
    """Run one identity on ``instances`` seeded random inputs at random exact chart points."""
    if name not in _IDENTITIES:
        raise KeyError(f"unknown check {name!r}; expected one of {CHECKS}")
    rng = random.Random(f"{name}:{geometry}:{n}:{seed}")
    order = 2 * w_max + 4
    worst = 0.0
    for _ in range(instances):
        geom = exact_geometry(geometry, rng, order, n)
        worst = max(worst, _IDENTITIES[name](rng, geom, w_max))
    return CheckResult(name, geometry if n == 1 else f"{geometry}{n}", instances, worst)
