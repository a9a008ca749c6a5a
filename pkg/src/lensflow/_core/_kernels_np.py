"""Vectorized numpy fallback for the per-step kernels.

Mirrors _kernels.pyx operation for operation (including scatter order).
Data movement and plain arithmetic match the compiled backend bitwise;
the power law does not, because numpy's vectorized pow and libm pow can
disagree in the last couple of bits, so constitutive outputs may drift
by a few ulp between backends. Within one backend results are exactly
reproducible.
"""

import numpy as np


def constitutive_fields(s_n, swr, mobile, pd, ninv_lam, exp_w, exp_n,
                        inv_mu_w, inv_mu_n, se_floor):
    se = (1.0 - s_n - swr) / mobile
    np.clip(se, 0.0, 1.0, out=se)
    se_c = np.maximum(se, se_floor)
    pc = pd * se_c ** ninv_lam
    lam_w = se ** exp_w * inv_mu_w
    one = 1.0 - se
    lam_n = one * one * (1.0 - se ** exp_n) * inv_mu_n
    dpc_abs = pc * (-ninv_lam) / (se_c * mobile)
    return se, pc, lam_w, lam_n, dpc_abs


def face_mobilities(p, pc, se, lam_w, lam_n, left, right, dz,
                    sstar_lr, sstar_rl, rho_w_g, rho_n_g):
    dp = p[left] - p[right]
    dpw = dp - rho_w_g * dz
    mob_w = np.where(dpw >= 0.0, lam_w[left], lam_w[right])
    dpn = dp + (pc[left] - pc[right]) - rho_n_g * dz
    up_left = dpn >= 0.0
    se_up = np.where(up_left, se[left], se[right])
    sstar = np.where(up_left, sstar_lr, sstar_rl)
    mob_n = np.where(up_left, lam_n[left], lam_n[right])
    mob_n = np.where(se_up >= sstar, 0.0, mob_n)
    return mob_w, mob_n


def face_fluxes(p, pc, mob_w, mob_n, trans, left, right, dz,
                rho_w_g, rho_n_g):
    dp = p[left] - p[right]
    f_w = trans * mob_w * (dp - rho_w_g * dz)
    f_n = trans * mob_n * (dp + (pc[left] - pc[right]) - rho_n_g * dz)
    return f_w, f_n


def divergence(f, left, right, ncells):
    div = np.zeros(ncells)
    np.subtract.at(div, left, f)
    np.add.at(div, right, f)
    return div


def flow_sums(f, left, right, ncells):
    pos = np.maximum(f, 0.0)
    neg = np.maximum(-f, 0.0)
    outflow = np.zeros(ncells)
    inflow = np.zeros(ncells)
    np.add.at(outflow, left, pos)
    np.add.at(inflow, left, neg)
    np.add.at(inflow, right, pos)
    np.add.at(outflow, right, neg)
    return outflow, inflow


def capillary_sums(mob_n, trans, dpc_abs, left, right, ncells):
    w = trans * mob_n * np.maximum(dpc_abs[left], dpc_abs[right])
    sums = np.zeros(ncells)
    np.add.at(sums, left, w)
    np.add.at(sums, right, w)
    return sums
