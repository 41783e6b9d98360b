"""Compiled integration kernels for the cortico-basal-ganglia network.

Units inside the kernels: ms, mV, uA/cm^2 (specific membrane capacitance 1).
Every population is advanced with exponential Euler: gating variables relax
towards their steady state with the exact linear-step factor, and the membrane
equation is solved as a linear ODE with the conductances frozen for one step.
This keeps the stiff GP sodium current stable at the default 25 us step.

State arrays are (n_vars, n_neurons); the last row is the outgoing synaptic
gating variable ``s`` of that population.
"""

import math

import numpy as np
from numba import njit

# rows of the state arrays
V = 0
# cortex / interneuron: v, m, h, n, p, s
CX_M, CX_H, CX_N, CX_P, CX_S = 1, 2, 3, 4, 5
# stn / gpe / gpi: v, h, n, r, ca, s
BG_H, BG_N, BG_R, BG_CA, BG_S = 1, 2, 3, 4, 5
# thalamus: v, h, r, s
TH_H, TH_R, TH_S = 1, 2, 3

# entries of the scalar parameter vector
(
    P_DT,
    P_E_AMPA,
    P_E_GABA,
    P_G_CTX_STN,
    P_G_GPE_STN,
    P_G_STN_GPE,
    P_G_GPE_GPE,
    P_G_STR_GPE,
    P_G_STN_GPI,
    P_G_GPE_GPI,
    P_G_GPI_THL,
    P_G_THL_CTX,
    P_G_INT_CTX,
    P_G_CTX_INT,
    P_BIAS_CTX,
    P_BIAS_INT,
    P_BIAS_STN,
    P_BIAS_GPE,
    P_BIAS_GPI,
    P_BIAS_THL,
    P_DBS_CTX,
    P_DBS_STN,
    P_DBS_GPE,
    P_STR_TAU,
    P_LFP_GAIN,
    P_V_DEND,
    N_PARAMS,
) = range(27)

SPIKE_V = -20.0


@njit(cache=True, inline="always")
def _sig(x):
    return 1.0 / (1.0 + math.exp(-x))


@njit(cache=True, inline="always")
def _vtrap(x, y):
    # x / (exp(x/y) - 1) with the removable singularity at x = 0
    r = x / y
    if abs(r) < 1e-6:
        return y * (1.0 - 0.5 * r)
    return x / (math.exp(r) - 1.0)


@njit(cache=True, inline="always")
def _relax(x, xinf, rate, dt):
    return xinf + (x - xinf) * math.exp(-rate * dt)


@njit(cache=True, inline="always")
def _syn(s, v, alpha, beta, v_half, slope, dt):
    h = alpha * _sig((v - v_half) / slope)
    rate = h + beta
    return _relax(s, h / rate, rate, dt)


@njit(cache=True)
def _step_cortical(x, i, dt, g_na, g_kd, g_m, g_l, e_l, vt, tau_max):
    v = x[V, i]
    dv = v - vt
    am = 0.32 * _vtrap(-(dv - 13.0), 4.0)
    bm = 0.28 * _vtrap(dv - 40.0, 5.0)
    ah = 0.128 * math.exp(-(dv - 17.0) / 18.0)
    bh = 4.0 / (1.0 + math.exp(-(dv - 40.0) / 5.0))
    an = 0.032 * _vtrap(-(dv - 15.0), 5.0)
    bn = 0.5 * math.exp(-(dv - 10.0) / 40.0)
    pinf = _sig((v + 35.0) / 10.0)
    taup = tau_max / (3.3 * math.exp((v + 35.0) / 20.0) + math.exp(-(v + 35.0) / 20.0))
    x[CX_M, i] = _relax(x[CX_M, i], am / (am + bm), am + bm, dt)
    x[CX_H, i] = _relax(x[CX_H, i], ah / (ah + bh), ah + bh, dt)
    x[CX_N, i] = _relax(x[CX_N, i], an / (an + bn), an + bn, dt)
    x[CX_P, i] = _relax(x[CX_P, i], pinf, 1.0 / taup, dt)
    m = x[CX_M, i]
    n = x[CX_N, i]
    gna = g_na * m * m * m * x[CX_H, i]
    gk = g_kd * n * n * n * n + g_m * x[CX_P, i]
    g = gna + gk + g_l
    ge = gna * 50.0 - gk * 90.0 + g_l * e_l
    return g, ge


@njit(cache=True)
def _step_stn(x, i, dt):
    v = x[V, i]
    hinf = _sig(-(v + 39.0) / 3.1)
    ninf = _sig((v + 32.0) / 8.0)
    rinf = _sig(-(v + 67.0) / 2.0)
    tauh = 1.0 + 500.0 * _sig(-(v + 57.0) / 3.0)
    taun = 1.0 + 100.0 * _sig(-(v + 80.0) / 26.0)
    taur = 40.0 + 17.5 * _sig(-(v - 68.0) / 2.2)
    x[BG_H, i] = _relax(x[BG_H, i], hinf, 0.75 / tauh, dt)
    x[BG_N, i] = _relax(x[BG_N, i], ninf, 0.75 / taun, dt)
    x[BG_R, i] = _relax(x[BG_R, i], rinf, 0.2 / taur, dt)
    h = x[BG_H, i]
    n = x[BG_N, i]
    r = x[BG_R, i]
    minf = _sig((v + 30.0) / 15.0)
    ainf = _sig((v + 63.0) / 7.8)
    sinf = _sig((v + 39.0) / 8.0)
    binf = _sig((r - 0.4) / 0.1) - _sig(-4.0)
    gna = 37.5 * minf * minf * minf * h
    gk = 45.0 * n * n * n * n
    gt = 0.5 * ainf * ainf * ainf * binf * binf * r
    gca = 0.5 * sinf * sinf
    ca = x[BG_CA, i]
    gahp = 9.0 * ca / (ca + 15.0)
    i_t = gt * (v - 140.0)
    i_ca = gca * (v - 140.0)
    x[BG_CA, i] = max(0.0, ca + dt * 3.75e-5 * (-i_ca - i_t - 22.5 * ca))
    g = gna + gk + gt + gca + gahp + 2.25
    ge = gna * 55.0 - (gk + gahp) * 80.0 + (gt + gca) * 140.0 - 2.25 * 60.0
    return g, ge


@njit(cache=True)
def _step_gp(x, i, dt):
    v = x[V, i]
    hinf = _sig(-(v + 58.0) / 12.0)
    ninf = _sig((v + 50.0) / 14.0)
    rinf = _sig(-(v + 70.0) / 2.0)
    tau_hn = 0.05 + 0.27 * _sig(-(v + 40.0) / 12.0)
    x[BG_H, i] = _relax(x[BG_H, i], hinf, 0.05 / tau_hn, dt)
    x[BG_N, i] = _relax(x[BG_N, i], ninf, 0.05 / tau_hn, dt)
    x[BG_R, i] = _relax(x[BG_R, i], rinf, 1.0 / 30.0, dt)
    h = x[BG_H, i]
    n = x[BG_N, i]
    r = x[BG_R, i]
    minf = _sig((v + 37.0) / 10.0)
    ainf = _sig((v + 57.0) / 2.0)
    sinf = _sig((v + 35.0) / 2.0)
    gna = 120.0 * minf * minf * minf * h
    gk = 30.0 * n * n * n * n
    gt = 0.5 * ainf * ainf * ainf * r
    gca = 0.15 * sinf * sinf
    ca = x[BG_CA, i]
    gahp = 30.0 * ca / (ca + 30.0)
    i_t = gt * (v - 120.0)
    i_ca = gca * (v - 120.0)
    x[BG_CA, i] = max(0.0, ca + dt * 1e-4 * (-i_ca - i_t - 15.0 * ca))
    g = gna + gk + gt + gca + gahp + 0.1
    ge = gna * 55.0 - (gk + gahp) * 80.0 + (gt + gca) * 120.0 - 0.1 * 65.0
    return g, ge


@njit(cache=True)
def _step_thal(x, i, dt):
    v = x[V, i]
    hinf = _sig(-(v + 41.0) / 4.0)
    ah = 0.128 * math.exp(-(v + 46.0) / 18.0)
    bh = 4.0 / (1.0 + math.exp(-(v + 23.0) / 5.0))
    rinf = _sig(-(v + 84.0) / 4.0)
    taur = 0.15 * (28.0 + math.exp(-(v + 25.0) / 10.5))
    x[TH_H, i] = _relax(x[TH_H, i], hinf, ah + bh, dt)
    x[TH_R, i] = _relax(x[TH_R, i], rinf, 1.0 / taur, dt)
    h = x[TH_H, i]
    r = x[TH_R, i]
    minf = _sig((v + 37.0) / 7.0)
    pinf = _sig((v + 60.0) / 6.2)
    q = 0.75 * (1.0 - h)
    gna = 3.0 * minf * minf * minf * h
    gk = 5.0 * q * q * q * q
    gt = 5.0 * pinf * pinf * r
    g = gna + gk + gt + 0.05
    ge = gna * 50.0 - gk * 75.0 - 0.05 * 70.0
    return g, ge


@njit(cache=True, inline="always")
def _sum_s(s, idx, i):
    acc = 0.0
    for k in range(idx.shape[1]):
        acc += s[idx[i, k]]
    return acc


@njit(cache=True)
def advance(
    ctx, inn, stn, gpe, gpi, thl, s_str, above, counts,
    stn_gpe, stn_ctx, gpe_str, gpe_gpe, gpe_stn, gpi_stn, gpi_gpe,
    thl_gpi, ctx_thl, ctx_int, int_ctx,
    par, dbs_stn, dbs_ctx, dbs_gpe, lfp_w,
    i_dbs, noise, noise_row0, noise_phase0, steps_per_noise,
    ev_step, ev_src, ev_ptr, step0, lfp_out,
):
    """Advance the network by ``i_dbs.size`` steps.

    ``noise`` holds one row of per-neuron currents per noise interval, in the
    global neuron order ctx, int, stn, gpe, gpi, thl. Striatal spike events
    are (epoch-relative step, source) pairs sorted by step; ``ev_ptr`` is the
    first unconsumed event. Returns the new event pointer.
    """
    dt = par[P_DT]
    e_ampa = par[P_E_AMPA]
    e_gaba = par[P_E_GABA]
    v_dend = par[P_V_DEND]
    str_decay = math.exp(-dt / par[P_STR_TAU])
    n_ctx = ctx.shape[1]
    n_int = inn.shape[1]
    n_stn = stn.shape[1]
    n_gpe = gpe.shape[1]
    n_gpi = gpi.shape[1]
    n_thl = thl.shape[1]
    o_int = n_ctx
    o_stn = o_int + n_int
    o_gpe = o_stn + n_stn
    o_gpi = o_gpe + n_gpe
    o_thl = o_gpi + n_gpi

    # presynaptic gating is read from a snapshot so update order is irrelevant
    s_ctx = np.empty(n_ctx)
    s_int = np.empty(n_int)
    s_stn = np.empty(n_stn)
    s_gpe = np.empty(n_gpe)
    s_gpi = np.empty(n_gpi)
    s_thl = np.empty(n_thl)

    n_ev = ev_step.size
    row = noise_row0
    phase = noise_phase0
    for k in range(i_dbs.size):
        step = step0 + k
        while ev_ptr < n_ev and ev_step[ev_ptr] <= step:
            s_str[ev_src[ev_ptr]] += 1.0
            ev_ptr += 1
        amp = i_dbs[k]
        s_ctx[:] = ctx[CX_S]
        s_int[:] = inn[CX_S]
        s_stn[:] = stn[BG_S]
        s_gpe[:] = gpe[BG_S]
        s_gpi[:] = gpi[BG_S]
        s_thl[:] = thl[TH_S]
        nz = noise[row]

        for i in range(n_ctx):
            g, ge = _step_cortical(ctx, i, dt, 56.0, 6.0, 0.075, 0.0205, -70.3, -56.2, 608.0)
            ge_syn = par[P_G_THL_CTX] * _sum_s(s_thl, ctx_thl, i)
            gi_syn = par[P_G_INT_CTX] * _sum_s(s_int, ctx_int, i)
            g += ge_syn + gi_syn
            ge += ge_syn * e_ampa + gi_syn * e_gaba
            ge += par[P_BIAS_CTX] + nz[i] + amp * par[P_DBS_CTX] * dbs_ctx[i]
            vinf = ge / g
            ctx[V, i] = vinf + (ctx[V, i] - vinf) * math.exp(-g * dt)
            ctx[CX_S, i] = _syn(ctx[CX_S, i], ctx[V, i], 1.1, 0.19, SPIKE_V, 2.0, dt)

        for i in range(n_int):
            g, ge = _step_cortical(inn, i, dt, 58.0, 3.9, 0.0787, 0.038, -70.4, -57.9, 502.0)
            ge_syn = par[P_G_CTX_INT] * _sum_s(s_ctx, int_ctx, i)
            g += ge_syn
            ge += ge_syn * e_ampa + par[P_BIAS_INT] + nz[o_int + i]
            vinf = ge / g
            inn[V, i] = vinf + (inn[V, i] - vinf) * math.exp(-g * dt)
            inn[CX_S, i] = _syn(inn[CX_S, i], inn[V, i], 5.0, 0.1, SPIKE_V, 2.0, dt)

        lfp = 0.0
        for i in range(n_stn):
            g, ge = _step_stn(stn, i, dt)
            gi_syn = par[P_G_GPE_STN] * _sum_s(s_gpe, stn_gpe, i)
            ge_syn = par[P_G_CTX_STN] * _sum_s(s_ctx, stn_ctx, i)
            v = stn[V, i]
            lfp += lfp_w[i] * (gi_syn * (v_dend - e_gaba) + ge_syn * (v_dend - e_ampa))
            g += ge_syn + gi_syn
            ge += ge_syn * e_ampa + gi_syn * e_gaba
            ge += par[P_BIAS_STN] + nz[o_stn + i] + amp * par[P_DBS_STN] * dbs_stn[i]
            vinf = ge / g
            stn[V, i] = vinf + (v - vinf) * math.exp(-g * dt)
            stn[BG_S, i] = _syn(stn[BG_S, i], stn[V, i], 5.0, 1.0, -9.0, 8.0, dt)
        lfp_out[k] = -par[P_LFP_GAIN] * lfp

        for i in range(n_gpe):
            g, ge = _step_gp(gpe, i, dt)
            ge_syn = par[P_G_STN_GPE] * _sum_s(s_stn, gpe_stn, i)
            gi_syn = par[P_G_GPE_GPE] * _sum_s(s_gpe, gpe_gpe, i)
            gi_syn += par[P_G_STR_GPE] * _sum_s(s_str, gpe_str, i)
            g += ge_syn + gi_syn
            ge += ge_syn * e_ampa + gi_syn * e_gaba
            ge += par[P_BIAS_GPE] + nz[o_gpe + i] + amp * par[P_DBS_GPE] * dbs_gpe[i]
            vinf = ge / g
            gpe[V, i] = vinf + (gpe[V, i] - vinf) * math.exp(-g * dt)
            gpe[BG_S, i] = _syn(gpe[BG_S, i], gpe[V, i], 2.0, 0.04, -37.0, 2.0, dt)

        for i in range(n_gpi):
            g, ge = _step_gp(gpi, i, dt)
            ge_syn = par[P_G_STN_GPI] * _sum_s(s_stn, gpi_stn, i)
            gi_syn = par[P_G_GPE_GPI] * _sum_s(s_gpe, gpi_gpe, i)
            g += ge_syn + gi_syn
            ge += ge_syn * e_ampa + gi_syn * e_gaba + par[P_BIAS_GPI] + nz[o_gpi + i]
            vinf = ge / g
            gpi[V, i] = vinf + (gpi[V, i] - vinf) * math.exp(-g * dt)
            gpi[BG_S, i] = _syn(gpi[BG_S, i], gpi[V, i], 2.0, 0.04, -37.0, 2.0, dt)

        for i in range(n_thl):
            g, ge = _step_thal(thl, i, dt)
            gi_syn = par[P_G_GPI_THL] * _sum_s(s_gpi, thl_gpi, i)
            g += gi_syn
            ge += gi_syn * e_gaba + par[P_BIAS_THL] + nz[o_thl + i]
            vinf = ge / g
            thl[V, i] = vinf + (thl[V, i] - vinf) * math.exp(-g * dt)
            thl[TH_S, i] = _syn(thl[TH_S, i], thl[V, i], 1.1, 0.19, SPIKE_V, 2.0, dt)

        for i in range(s_str.size):
            s_str[i] *= str_decay

        _count(ctx[V], above, counts, 0)
        _count(inn[V], above, counts, o_int)
        _count(stn[V], above, counts, o_stn)
        _count(gpe[V], above, counts, o_gpe)
        _count(gpi[V], above, counts, o_gpi)
        _count(thl[V], above, counts, o_thl)

        phase += 1
        if phase == steps_per_noise:
            phase = 0
            row += 1
    return ev_ptr


@njit(cache=True, inline="always")
def _count(v, above, counts, offset):
    for i in range(v.size):
        up = v[i] > SPIKE_V
        if up and not above[offset + i]:
            counts[offset + i] += 1
        above[offset + i] = up
