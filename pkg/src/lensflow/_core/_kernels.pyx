# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-step kernels: constitutive fields, face upwinding,
fluxes, and scatter reductions over the face table.

Loop and operation order deliberately mirror _kernels_np.py so the two
backends agree bitwise.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()


def constitutive_fields(double[::1] s_n, double[::1] swr, double[::1] mobile,
                        double[::1] pd, double[::1] ninv_lam,
                        double[::1] exp_w, double[::1] exp_n,
                        double inv_mu_w, double inv_mu_n, double se_floor):
    cdef Py_ssize_t n = s_n.shape[0]
    se_arr = np.empty(n)
    pc_arr = np.empty(n)
    lw_arr = np.empty(n)
    ln_arr = np.empty(n)
    dp_arr = np.empty(n)
    cdef double[::1] se = se_arr
    cdef double[::1] pc = pc_arr
    cdef double[::1] lam_w = lw_arr
    cdef double[::1] lam_n = ln_arr
    cdef double[::1] dpc = dp_arr
    cdef Py_ssize_t i
    cdef double s, sec, one, p
    for i in range(n):
        s = (1.0 - s_n[i] - swr[i]) / mobile[i]
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
        se[i] = s
        sec = s if s > se_floor else se_floor
        p = pd[i] * pow(sec, ninv_lam[i])
        pc[i] = p
        lam_w[i] = pow(s, exp_w[i]) * inv_mu_w
        one = 1.0 - s
        lam_n[i] = one * one * (1.0 - pow(s, exp_n[i])) * inv_mu_n
        dpc[i] = p * (-ninv_lam[i]) / (sec * mobile[i])
    return se_arr, pc_arr, lw_arr, ln_arr, dp_arr


def face_mobilities(double[::1] p, double[::1] pc, double[::1] se,
                    double[::1] lam_w, double[::1] lam_n,
                    cnp.int64_t[::1] left, cnp.int64_t[::1] right, double[::1] dz,
                    double[::1] sstar_lr, double[::1] sstar_rl,
                    double rho_w_g, double rho_n_g):
    cdef Py_ssize_t nf = left.shape[0]
    mw_arr = np.empty(nf)
    mn_arr = np.empty(nf)
    cdef double[::1] mob_w = mw_arr
    cdef double[::1] mob_n = mn_arr
    cdef Py_ssize_t i, l, r
    cdef double dp, dpw, dpn, se_up, sstar, mn
    for i in range(nf):
        l = left[i]
        r = right[i]
        dp = p[l] - p[r]
        dpw = dp - rho_w_g * dz[i]
        mob_w[i] = lam_w[l] if dpw >= 0.0 else lam_w[r]
        dpn = dp + (pc[l] - pc[r]) - rho_n_g * dz[i]
        if dpn >= 0.0:
            se_up = se[l]
            sstar = sstar_lr[i]
            mn = lam_n[l]
        else:
            se_up = se[r]
            sstar = sstar_rl[i]
            mn = lam_n[r]
        mob_n[i] = 0.0 if se_up >= sstar else mn
    return mw_arr, mn_arr


def face_fluxes(double[::1] p, double[::1] pc,
                double[::1] mob_w, double[::1] mob_n, double[::1] trans,
                cnp.int64_t[::1] left, cnp.int64_t[::1] right, double[::1] dz,
                double rho_w_g, double rho_n_g):
    cdef Py_ssize_t nf = left.shape[0]
    fw_arr = np.empty(nf)
    fn_arr = np.empty(nf)
    cdef double[::1] f_w = fw_arr
    cdef double[::1] f_n = fn_arr
    cdef Py_ssize_t i, l, r
    cdef double dp
    for i in range(nf):
        l = left[i]
        r = right[i]
        dp = p[l] - p[r]
        f_w[i] = trans[i] * mob_w[i] * (dp - rho_w_g * dz[i])
        f_n[i] = trans[i] * mob_n[i] * (dp + (pc[l] - pc[r]) - rho_n_g * dz[i])
    return fw_arr, fn_arr


def divergence(double[::1] f, cnp.int64_t[::1] left, cnp.int64_t[::1] right, Py_ssize_t ncells):
    div_arr = np.zeros(ncells)
    cdef double[::1] div = div_arr
    cdef Py_ssize_t nf = left.shape[0]
    cdef Py_ssize_t i
    for i in range(nf):
        div[left[i]] -= f[i]
    for i in range(nf):
        div[right[i]] += f[i]
    return div_arr


def flow_sums(double[::1] f, cnp.int64_t[::1] left, cnp.int64_t[::1] right, Py_ssize_t ncells):
    out_arr = np.zeros(ncells)
    in_arr = np.zeros(ncells)
    cdef double[::1] outflow = out_arr
    cdef double[::1] inflow = in_arr
    cdef Py_ssize_t nf = left.shape[0]
    cdef Py_ssize_t i
    cdef double v
    for i in range(nf):
        v = f[i]
        if v > 0.0:
            outflow[left[i]] += v
    for i in range(nf):
        v = -f[i]
        if v > 0.0:
            inflow[left[i]] += v
    for i in range(nf):
        v = f[i]
        if v > 0.0:
            inflow[right[i]] += v
    for i in range(nf):
        v = -f[i]
        if v > 0.0:
            outflow[right[i]] += v
    return out_arr, in_arr


def capillary_sums(double[::1] mob_n, double[::1] trans, double[::1] dpc_abs,
                   cnp.int64_t[::1] left, cnp.int64_t[::1] right, Py_ssize_t ncells):
    sums_arr = np.zeros(ncells)
    cdef double[::1] sums = sums_arr
    cdef Py_ssize_t nf = left.shape[0]
    cdef Py_ssize_t i
    cdef double a, b, w
    w_arr = np.empty(nf)
    cdef double[::1] wv = w_arr
    for i in range(nf):
        a = dpc_abs[left[i]]
        b = dpc_abs[right[i]]
        wv[i] = trans[i] * mob_n[i] * (a if a > b else b)
    for i in range(nf):
        sums[left[i]] += wv[i]
    for i in range(nf):
        sums[right[i]] += wv[i]
    return sums_arr
