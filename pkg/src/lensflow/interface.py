"""Capillary entry-pressure condition at heterogeneous faces.

A non-wetting front arriving at a finer medium (higher entry pressure)
stops until the coarse-side capillary pressure reaches the fine-side
entry pressure. In effective-saturation form the gate is a threshold
se_star on the coarse side: flux into the fine medium is exactly zero
while se_coarse >= se_star, and once it penetrates the two sides sit on
a capillary-pressure-continuous saturation jump.
"""

from dataclasses import dataclass

import numpy as np

from .constitutive import capillary_pressure

BLOCKED = "blocked"
PENETRATING = "penetrating"

# Sentinel threshold for face directions that never block: effective
# saturation can never reach 2, so `se >= NO_BARRIER` is always false.
NO_BARRIER = 2.0


@dataclass(frozen=True)
class InterfaceRule:
    """One oriented material pair: coarse (lower entry pressure) -> fine."""

    coarse: int  # material id on the low-entry-pressure side
    fine: int
    se_star: float  # threshold effective wetting saturation on the coarse side


def threshold_saturation(coarse, fine):
    """Coarse-side se at which its pc reaches the fine-side entry pressure.

    se_star = (pd_coarse / pd_fine)**lambda_coarse. Equal entry pressures
    give 1 (no barrier beyond ordinary entry). A misordered pair swaps
    roles.
    """
    if fine.p_entry < coarse.p_entry:
        coarse, fine = fine, coarse
    if fine.p_entry == coarse.p_entry:
        return 1.0
    return (coarse.p_entry / fine.p_entry) ** coarse.pore_size_index


def entry_state(se_upwind, rule):
    """Blocked while the coarse side stays wetter than the threshold."""
    return BLOCKED if se_upwind >= rule.se_star else PENETRATING


def equilibrium_saturation(se_coarse, coarse, fine):
    """Fine-side effective saturation in capillary equilibrium (Eq. jump).

    Solves pd_c * se_c**(-1/lam_c) = pd_f * se_f**(-1/lam_f) for se_f.
    Only applicable on the penetrating branch (se_coarse <= se_star).
    """
    if fine.p_entry < coarse.p_entry:
        coarse, fine = fine, coarse
    sstar = threshold_saturation(coarse, fine)
    if se_coarse > sstar:
        raise ValueError(
            f"equilibrium branch not applicable: se_coarse={se_coarse} "
            f"exceeds threshold {sstar}"
        )
    pc = capillary_pressure(se_coarse, coarse)
    return (fine.p_entry / pc) ** fine.pore_size_index


def interface_upwind(se_up, lam_n_up, coarse_is_upwind, rule):
    """Non-wetting face mobility after applying the entry gate.

    Flow from the coarse into the fine side carries zero mobility while
    blocked; every other case is ordinary phase-potential upwinding.
    """
    if coarse_is_upwind and entry_state(se_up, rule) == BLOCKED:
        return 0.0
    return lam_n_up


def build_rules(materials, pairs):
    """InterfaceRule per unordered material-id pair, bisection-checked.

    The closed form is cheap insurance against misconfigured pd/lambda:
    every rule is validated here against a bisection solve of the
    capillary law before the simulation starts.
    """
    rules = {}
    for i, j in pairs:
        a, b = materials[i], materials[j]
        if a.p_entry <= b.p_entry:
            coarse_id, fine_id, coarse, fine = i, j, a, b
        else:
            coarse_id, fine_id, coarse, fine = j, i, b, a
        sstar = threshold_saturation(coarse, fine)
        if coarse.p_entry < fine.p_entry:
            lo, hi = 1e-15, 1.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if capillary_pressure(mid, coarse) > fine.p_entry:
                    lo = mid
                else:
                    hi = mid
            bisected = 0.5 * (lo + hi)
            if abs(bisected - sstar) > 1e-8 * max(sstar, 1e-30):
                raise RuntimeError(
                    f"threshold closed form disagrees with bisection for "
                    f"pair ({coarse.name}, {fine.name}): {sstar} vs {bisected}"
                )
        rules[(min(i, j), max(i, j))] = InterfaceRule(
            coarse=coarse_id, fine=fine_id, se_star=sstar
        )
    return rules


def face_thresholds(faces, materials):
    """Per-face blocking thresholds for both flow directions.

    Returns (sstar_lr, sstar_rl): `sstar_lr` gates flow left -> right
    (blocked iff se_left >= sstar_lr), likewise for right -> left.
    Directions without a barrier get the NO_BARRIER sentinel. Validated
    rules are built for every heterogeneous pair present.
    """
    pd = np.array([m.p_entry for m in materials])
    pairs = set()
    ml, mr = faces.mat_left, faces.mat_right
    for i, j in zip(ml[faces.heterogeneous], mr[faces.heterogeneous]):
        pairs.add((min(int(i), int(j)), max(int(i), int(j))))
    rules = build_rules(materials, sorted(pairs))

    sstar_lr = np.full(faces.nfaces, NO_BARRIER)
    sstar_rl = np.full(faces.nfaces, NO_BARRIER)
    for (i, j), rule in rules.items():
        sel = ((ml == i) & (mr == j)) | ((ml == j) & (mr == i))
        into_right = sel & (pd[mr] > pd[ml])
        into_left = sel & (pd[ml] > pd[mr])
        sstar_lr[into_right] = rule.se_star
        sstar_rl[into_left] = rule.se_star
    return sstar_lr, sstar_rl, rules
