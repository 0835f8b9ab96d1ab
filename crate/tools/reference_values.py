#!/usr/bin/env python3
"""Independent reference pipeline for the passive-receiver BB84 model.

Every quantity is computed directly from the model's defining formulas,
separately from the Rust crate, so the printed values can be frozen into
unit and acceptance tests as oracle constants.

Run:  python3 tools/reference_values.py
"""

import math
from itertools import product

import numpy as np


# ---------------------------------------------------------------------------
# splitter / single-photon measurement
# ---------------------------------------------------------------------------

def splitting(p_z, r):
    """Virtual three-way splitter probabilities (Z line, X line, loss)."""
    pz = p_z
    px = (1.0 - p_z) * r
    pl = max(0.0, 1.0 - pz - px)
    return pz, px, pl


def multinom(n, ks):
    out = 1
    rem = n
    for k in ks:
        out *= math.comb(rem, k)
        rem -= k
    return out


def povm_bruteforce(p_z, r, d, n_b):
    """Merged-outcome POVMs on the n_b-photon space.

    Enumerates splitter destinations and the 16 detector click patterns per
    destination; no algebraic shortcuts. Basis: (m_H, m_V) with m_H
    descending. Returns dict of (n_b+1)x(n_b+1) matrices.
    """
    pz, px, pl = splitting(p_z, r)
    dim = n_b + 1
    basis = [(n_b - i, i) for i in range(dim)]
    ops = {k: np.zeros((dim, dim)) for k in ("Z", "X", "cross", "noclick")}
    for ia, (aH, aV) in enumerate(basis):
        for zh in range(aH + 1):
            for xh in range(aH - zh + 1):
                lh = aH - zh - xh
                for zv in range(aV + 1):
                    for xv in range(aV - zv + 1):
                        lv = aV - zv - xv
                        w2 = (multinom(aH, (zh, xh, lh))
                              * multinom(aV, (zv, xv, lv))
                              * pz ** (zh + zv) * px ** (xh + xv)
                              * pl ** (lh + lv))
                        if w2 == 0.0:
                            continue
                        # detector occupation: z_H, z_V and the X line pair
                        # (any X photon certainly fires one of the two X
                        # detectors, so only the line total matters here)
                        occ = (zh > 0, zv > 0, xh + xv > 0, False)
                        for pat in product((0, 1), repeat=4):
                            prob = 1.0
                            for k in range(4):
                                pk = 1.0 if occ[k] else d
                                prob *= pk if pat[k] else (1.0 - pk)
                            if prob == 0.0:
                                continue
                            zc = pat[0] or pat[1]
                            xc = pat[2] or pat[3]
                            if zc and xc:
                                key = "cross"
                            elif zc:
                                key = "Z"
                            elif xc:
                                key = "X"
                            else:
                                key = "noclick"
                            ops[key][ia, ia] += w2 * prob
    return ops


def single_photon_fine(p_z, r, d):
    """Bit-resolved single-photon operators from the six-mode dilation."""
    pz, px, pl = splitting(p_z, r)
    s2 = math.sqrt(0.5)
    # rows: z_H, z_V, x_D, x_Dbar, l_H, l_V; columns: input H, V
    M = np.array([
        [math.sqrt(pz), 0.0],
        [0.0, math.sqrt(pz)],
        [math.sqrt(px) * s2, math.sqrt(px) * s2],
        [math.sqrt(px) * s2, -math.sqrt(px) * s2],
        [math.sqrt(pl), 0.0],
        [0.0, math.sqrt(pl)],
    ])
    keys = ("Z0", "Z1", "X0", "X1", "cross", "noclick")
    ops = {k: np.zeros((2, 2)) for k in keys}
    for mode in range(6):
        pdet = [1.0 if k == mode else d for k in range(4)]
        w = {k: 0.0 for k in keys}
        for pat in product((0, 1), repeat=4):
            prob = 1.0
            for k in range(4):
                prob *= pdet[k] if pat[k] else (1.0 - pdet[k])
            zc = pat[0] or pat[1]
            xc = pat[2] or pat[3]
            if zc and xc:
                w["cross"] += prob
            elif not zc and not xc:
                w["noclick"] += prob
            elif zc:
                if pat[0] and pat[1]:
                    w["Z0"] += prob / 2
                    w["Z1"] += prob / 2
                elif pat[0]:
                    w["Z0"] += prob
                else:
                    w["Z1"] += prob
            else:
                if pat[2] and pat[3]:
                    w["X0"] += prob / 2
                    w["X1"] += prob / 2
                elif pat[2]:
                    w["X0"] += prob
                else:
                    w["X1"] += prob
        proj = np.outer(M[mode], M[mode])
        for k in keys:
            ops[k] += w[k] * proj
    return ops


def single_photon_closed(p_z, r, d):
    """Single-photon operators, closed algebraic forms."""
    pz, px, pl = splitting(p_z, r)
    I = np.eye(2)
    H = np.array([[1.0, 0.0], [0.0, 0.0]])
    V = np.array([[0.0, 0.0], [0.0, 1.0]])
    D = np.array([[0.5, 0.5], [0.5, 0.5]])
    Db = np.array([[0.5, -0.5], [-0.5, 0.5]])
    f3 = (1 - d) ** 3
    f2 = (1 - d) ** 2
    Fz0 = (pz * H + pl * d * I) * f3
    Fz1 = (pz * V + pl * d * I) * f3
    Fzd = (pz * d + pl * d * d) * f2 * I
    Fx0 = (px * D + pl * d * I) * f3
    Fx1 = (px * Db + pl * d * I) * f3
    Fxd = (px * d + pl * d * d) * f2 * I
    Fnc = pl * (1 - d) ** 4 * I
    Fcr = (1 - (1 + 2 * pl * d - pl * d * d) * f2) * I
    return {
        "Z0": Fz0 + Fzd / 2,
        "Z1": Fz1 + Fzd / 2,
        "X0": Fx0 + Fxd / 2,
        "X1": Fx1 + Fxd / 2,
        "noclick": Fnc,
        "cross": Fcr,
    }


def closed_merged(p_z, r, d, n_b):
    """Merged-outcome scalars: each operator is this multiple of identity."""
    pz, px, pl = splitting(p_z, r)
    q = (1 - d) ** 2
    sZ = q * ((pz + pl) ** n_b - q * pl ** n_b)
    sX = q * ((px + pl) ** n_b - q * pl ** n_b)
    sN = q * q * pl ** n_b
    sC = 1.0 - sZ - sX - sN
    return {"Z": sZ, "X": sX, "noclick": sN, "cross": sC}


def sifting(p_z, r, d):
    pz, px, pl = splitting(p_z, r)
    q = (1 - d) ** 2
    sZ = (pz + 2 * pl * d - pl * d * d) * q
    sX = (px + 2 * pl * d - pl * d * d) * q
    return sZ, sX, sZ / (sZ + sX), sX / (sZ + sX)


def alpha(p_z, r):
    pz, px, pl = splitting(p_z, r)
    den = 1.0 - ((pz + pl) ** 2 + (px + pl) ** 2)
    if den <= 0.0:
        return None, den
    return p_z * (pz + pl) ** 2 / den, den


# ---------------------------------------------------------------------------
# entropy / channel
# ---------------------------------------------------------------------------

def h(x):
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def eta_fiber(l_km, km_per_decade=50.0):
    return 10.0 ** (-l_km / km_per_decade)


def click(lam, d):
    return 1.0 - (1.0 - d) * math.exp(-lam)


def passive_intensity_stats(mu_a, l_km, p_z_bob, r, eta_z, d, e_ch, p_z_alice):
    """Per-intensity conditional statistics for the passive receiver.

    Returns (Q_Z, E_X, Q_cross, errZ_joint) where E_X and errZ_joint are
    joint fractions (sifted AND wrong bit) and everything is conditioned on
    Alice's intensity being mu_a.
    """
    eta_ch = eta_fiber(l_km)
    eta_x = eta_z * r
    p_x_bob = 1.0 - p_z_bob
    p_x_alice = 1.0 - p_z_alice
    lam_z = mu_a * eta_ch * eta_z * p_z_bob
    lam_x = mu_a * eta_ch * eta_x * p_x_bob
    P_Z = 1.0 - (1.0 - d) ** 2 * math.exp(-lam_z)
    P_X = 1.0 - (1.0 - d) ** 2 * math.exp(-lam_x)
    # matched-basis wrong-detector probability is e_ch in both bases
    cc = click(lam_z * (1 - e_ch), d)
    cw = click(lam_z * e_ch, d)
    errZ = cw * (1 - cc) + 0.5 * cc * cw
    ccx = click(lam_x * (1 - e_ch), d)
    cwx = click(lam_x * e_ch, d)
    errX = cwx * (1 - ccx) + 0.5 * ccx * cwx
    Q_Z = p_z_alice * P_Z * (1 - P_X)
    E_X = p_x_alice * errX * (1 - P_Z)
    Q_cross = P_Z * P_X
    errZ_joint = p_z_alice * errZ * (1 - P_X)
    return Q_Z, E_X, Q_cross, errZ_joint


def active_intensity_stats(mu_a, l_km, p_z_bob, eta_det, d, e_ch, p_z_alice):
    """Per-intensity conditional statistics for an actively switched receiver."""
    eta_ch = eta_fiber(l_km)
    lam = mu_a * eta_ch * eta_det
    P = 1.0 - (1.0 - d) ** 2 * math.exp(-lam)
    cc = click(lam * (1 - e_ch), d)
    cw = click(lam * e_ch, d)
    err = cw * (1 - cc) + 0.5 * cc * cw
    Q_Z = p_z_alice * p_z_bob * P
    E_X = (1 - p_z_alice) * (1 - p_z_bob) * err
    errZ_joint = p_z_alice * p_z_bob * err
    return Q_Z, E_X, 0.0, errZ_joint


def observed(stats_fn, probs, intensities):
    """Mix per-intensity stats into observed totals. Returns dict."""
    per = {tag: stats_fn(mu_a) for tag, mu_a in intensities.items()}
    qz_tot = sum(probs[t] * per[t][0] for t in per)
    ez_num = sum(probs[t] * per[t][3] for t in per)
    e_z = ez_num / qz_tot if qz_tot > 0 else 0.0
    return per, qz_tot, e_z


# ---------------------------------------------------------------------------
# decoy bounds
# ---------------------------------------------------------------------------

def lower_y0(q1, q2, nu1, nu2):
    return max((nu1 * q2 * math.exp(nu2) - nu2 * q1 * math.exp(nu1)) / (nu1 - nu2), 0.0)


def lower_y1(qmu, q1, q2, mu, nu1, nu2, y0_low):
    den = mu * nu1 - mu * nu2 - nu1 ** 2 + nu2 ** 2
    val = mu / den * (q1 * math.exp(nu1) - q2 * math.exp(nu2)
                      - (nu1 ** 2 - nu2 ** 2) / mu ** 2 * (qmu * math.exp(mu) - y0_low))
    return max(val, 0.0)


def upper_y1(f1, f2, nu1, nu2):
    return max((f1 * math.exp(nu1) - f2 * math.exp(nu2)) / (nu1 - nu2), 0.0)


def decoy_estimate(per, probs, mu, nu):
    """Vacuum+weak-decoy estimates from per-intensity observed stats."""
    qz_mu, qz_nu, qz_0 = per["signal"][0], per["decoy"][0], per["vacuum"][0]
    ex_nu, ex_0 = per["decoy"][1], per["vacuum"][1]
    qc_nu, qc_0 = per["decoy"][2], per["vacuum"][2]
    p_mu, p_nu, p_0 = probs["signal"], probs["decoy"], probs["vacuum"]
    pre0 = p_mu * math.exp(-mu) + p_nu * math.exp(-nu) + p_0
    pre1 = p_mu * mu * math.exp(-mu) + p_nu * nu * math.exp(-nu)
    y0_low = lower_y0(qz_nu, qz_0, nu, 0.0)
    y1_low = lower_y1(qz_mu, qz_nu, qz_0, mu, nu, 0.0, y0_low)
    ex1_up = upper_y1(ex_nu, ex_0, nu, 0.0)
    qc1_up = upper_y1(qc_nu, qc_0, nu, 0.0)
    return {
        "qz0_low": pre0 * y0_low,
        "qz1_low": pre1 * y1_low,
        "ex1_up": pre1 * ex1_up,
        "qc1_up": pre1 * qc1_up,
        "y0_low": y0_low,
        "y1_low": y1_low,
    }


# ---------------------------------------------------------------------------
# key rates
# ---------------------------------------------------------------------------

def ec_cost(qz_tot, e_z, c_ec):
    return c_ec * qz_tot * h(e_z)


def passive_rate(est, qz_tot, e_z, p_z_alice, p_z_bob, r, d, c_ec):
    a, _den = alpha(p_z_bob, r)
    f_ec = ec_cost(qz_tot, e_z, c_ec)
    if a is None:
        return 0.0, False, None
    _, _, ptZ, ptX = sifting(p_z_bob, r, d)
    gain1 = est["qz1_low"] - a * est["qc1_up"]
    lhs = (p_z_alice * ptZ / ((1 - p_z_alice) * ptX)) * est["ex1_up"]
    if gain1 <= 0.0 or lhs > 0.5 * gain1:
        return 0.0, False, None
    h_arg = lhs / gain1
    rate = est["qz0_low"] + gain1 * (1 - h(h_arg)) - f_ec
    if rate <= 0.0:
        return 0.0, False, h_arg
    return rate, True, h_arg


def virtual_rate(est, qz_tot, e_z, p_z_alice, p_z_bob, r, d, c_ec):
    f_ec = ec_cost(qz_tot, e_z, c_ec)
    _, _, ptZ, ptX = sifting(p_z_bob, r, d)
    gain1 = est["qz1_low"]
    lhs = (p_z_alice * ptZ / ((1 - p_z_alice) * ptX)) * est["ex1_up"]
    if gain1 <= 0.0 or lhs > 0.5 * gain1:
        return 0.0, False, None
    h_arg = lhs / gain1
    rate = est["qz0_low"] + gain1 * (1 - h(h_arg)) - f_ec
    if rate <= 0.0:
        return 0.0, False, h_arg
    return rate, True, h_arg


def active_rate(est, qz_tot, e_z, p_z_alice, p_z_bob, c_ec):
    f_ec = ec_cost(qz_tot, e_z, c_ec)
    gain1 = est["qz1_low"]
    ratio = (p_z_alice * p_z_bob) / ((1 - p_z_alice) * (1 - p_z_bob))
    if gain1 <= 0.0:
        return 0.0, False, None
    e_ph = ratio * est["ex1_up"] / gain1
    if e_ph > 0.5:
        return 0.0, False, e_ph
    rate = est["qz0_low"] + gain1 * (1 - h(e_ph)) - f_ec
    if rate <= 0.0:
        return 0.0, False, e_ph
    return rate, True, e_ph


# ---------------------------------------------------------------------------
# pipeline helpers
# ---------------------------------------------------------------------------

PRESET = dict(eta_z=0.7, d=1e-7, nu=0.05, e_ch=0.03, c_ec=1.1)


def pipeline(variant, l_km, p_z, mu, probs, preset=PRESET):
    """Full analytic pipeline at one parameter point. Ties Alice to Bob."""
    nu, d, e_ch, c_ec = preset["nu"], preset["d"], preset["e_ch"], preset["c_ec"]
    eta_z = preset["eta_z"]
    intensities = {"signal": mu, "decoy": nu, "vacuum": 0.0}
    if variant == "active":
        fn = lambda m: active_intensity_stats(m, l_km, p_z, eta_z, d, e_ch, p_z)
        per, qz_tot, e_z = observed(fn, probs, intensities)
        est = decoy_estimate(per, probs, mu, nu)
        return active_rate(est, qz_tot, e_z, p_z, p_z, c_ec)
    r = {"passive_r1": 1.0, "passive_r05": 0.5, "virtual": 1.0}[variant]
    fn = lambda m: passive_intensity_stats(m, l_km, p_z, r, eta_z, d, e_ch, p_z)
    per, qz_tot, e_z = observed(fn, probs, intensities)
    est = decoy_estimate(per, probs, mu, nu)
    if variant == "virtual":
        return virtual_rate(est, qz_tot, e_z, p_z, p_z, r, d, c_ec)
    return passive_rate(est, qz_tot, e_z, p_z, p_z, r, d, c_ec)


def optimize_point(variant, l_km, probs):
    best = (0.0, False, None, None, None)  # R, valid, h_arg, p_z, mu
    nu = PRESET["nu"]
    for i in range(50):
        p_z = 0.5 + 0.01 * i
        for j in range(20):
            mu = 0.05 * (j + 1)
            if mu <= nu:
                continue
            rate, valid, h_arg = pipeline(variant, l_km, p_z, mu, probs)
            if valid and rate > best[0]:
                best = (rate, valid, h_arg, p_z, mu)
    return best


def fmt(x):
    return repr(x)


def pm(label, mat):
    print(f"{label}:")
    for row in mat:
        print("   ", "  ".join(fmt(v) for v in row))


def main():
    print("=" * 78)
    print("SECTION A: single-photon operators, fine dilation vs closed forms")
    print("=" * 78)
    for (p_z, r, d) in [(0.9, 1.0, 1e-7), (0.7, 0.5, 0.01)]:
        fine = single_photon_fine(p_z, r, d)
        closed = single_photon_closed(p_z, r, d)
        worst = max(np.abs(fine[k] - closed[k]).max() for k in fine)
        tot = sum(closed.values())
        comp = np.abs(tot - np.eye(2)).max()
        print(f"model p_Z={p_z} r={r} d={d}: max|fine-closed|={worst:.3e} "
              f"completeness dev={comp:.3e}")
        if (p_z, r, d) == (0.7, 0.5, 0.01):
            for k in ("Z0", "X0", "cross", "noclick"):
                pm(f"  G_{k}", closed[k])
        sZ, sX, ptZ, ptX = sifting(p_z, r, d)
        print(f"  s_Z={fmt(sZ)} s_X={fmt(sX)} pt_Z={fmt(ptZ)} pt_X={fmt(ptX)}")
        a, den = alpha(p_z, r)
        print(f"  alpha={fmt(a) if a is not None else 'undefined'} den={fmt(den)}")

    print()
    print("=" * 78)
    print("SECTION B: merged brute force vs closed scalars, n_B = 1..4")
    print("=" * 78)
    for (p_z, r, d) in [(0.9, 1.0, 1e-7), (0.7, 0.5, 0.01), (0.5, 0.25, 0.1)]:
        for n_b in range(1, 5):
            bf = povm_bruteforce(p_z, r, d, n_b)
            cl = closed_merged(p_z, r, d, n_b)
            worst = 0.0
            for k in bf:
                dev = np.abs(bf[k] - cl[k] * np.eye(n_b + 1)).max()
                worst = max(worst, dev)
            tot = sum(bf.values())
            comp = np.abs(tot - np.eye(n_b + 1)).max()
            print(f"p_Z={p_z} r={r} d={d} n_B={n_b}: "
                  f"max|bf-closed|={worst:.3e} completeness={comp:.3e}")
        cl2 = closed_merged(p_z, r, d, 2)
        print(f"  n_B=2 scalars: Z={fmt(cl2['Z'])} X={fmt(cl2['X'])} "
              f"cross={fmt(cl2['cross'])} noclick={fmt(cl2['noclick'])}")

    print()
    print("=" * 78)
    print("SECTION C: entropy and guard-rail anchors")
    print("=" * 78)
    print("h(0.11) =", fmt(h(0.11)))
    print("h(0.5)  =", fmt(h(0.5)))
    print("h(0.03) =", fmt(h(0.03)))
    a, den = alpha(0.9, 1.0)
    print("alpha(0.9, 1.0) =", fmt(a), " den =", fmt(den))
    a, den = alpha(0.5, 1.0)
    print("alpha(0.5, 1.0) =", fmt(a), " den =", fmt(den))
    a, den = alpha(0.5, 0.1)
    print("alpha(0.5, 0.1) =", "undefined" if a is None else fmt(a), " den =", fmt(den))

    print()
    print("=" * 78)
    print("SECTION D: synthetic decoy profile anchors")
    print("=" * 78)
    # fixed synthetic yields, n = 0..24
    yz = [min(1.0, 2e-5 + 1 - 0.97 ** n * (1 - 0.01 * n)) for n in range(25)]
    ye = [0.004 + 0.018 * n / (n + 1.0) for n in range(25)]
    yc = [1e-6 + 0.002 * (1 - 0.85 ** n) for n in range(25)]

    def pgain(ys, mu_a):
        acc = 0.0
        p = math.exp(-mu_a)
        for n, y in enumerate(ys):
            acc += y * p
            p *= mu_a / (n + 1)
        return acc

    mu, nu1, nu2 = 0.6, 0.08, 0.02
    qz = {m: pgain(yz, m) for m in (mu, nu1, nu2)}
    ex = {m: pgain(ye, m) for m in (mu, nu1, nu2)}
    qc = {m: pgain(yc, m) for m in (mu, nu1, nu2)}
    print("profile gains: Q_Z(mu)=", fmt(qz[mu]), " Q_Z(nu1)=", fmt(qz[nu1]),
          " Q_Z(nu2)=", fmt(qz[nu2]))
    y0l = lower_y0(qz[nu1], qz[nu2], nu1, nu2)
    y1l = lower_y1(qz[mu], qz[nu1], qz[nu2], mu, nu1, nu2, y0l)
    e1u = upper_y1(ex[nu1], ex[nu2], nu1, nu2)
    c1u = upper_y1(qc[nu1], qc[nu2], nu1, nu2)
    print("generic bounds: y0_low=", fmt(y0l), " y1_low=", fmt(y1l))
    print("                ex1_up=", fmt(e1u), " qc1_up=", fmt(c1u))
    print("true values:    y0=", fmt(yz[0]), " y1=", fmt(yz[1]),
          " e1=", fmt(ye[1]), " c1=", fmt(yc[1]))
    print("sandwich slacks: y0", fmt(yz[0] - y0l), " y1", fmt(yz[1] - y1l),
          " e1", fmt(e1u - ye[1]), " c1", fmt(c1u - yc[1]))

    print()
    print("=" * 78)
    print("SECTION E: analytic channel + rate anchors, sec4.1 preset")
    print("=" * 78)
    p_z, mu = 0.9, 0.5
    for probs_name, probs in [("p=(1,0,0)", dict(signal=1.0, decoy=0.0, vacuum=0.0)),
                              ("p=(1/3,1/3,1/3)", dict(signal=1 / 3, decoy=1 / 3, vacuum=1 / 3))]:
        print(f"--- source probabilities {probs_name} ---")
        for l_km in (0.0, 25.0, 50.0, 100.0):
            fn = lambda m: passive_intensity_stats(
                m, l_km, p_z, 1.0, PRESET["eta_z"], PRESET["d"], PRESET["e_ch"], p_z)
            per, qz_tot, e_z = observed(fn, probs, {"signal": mu, "decoy": PRESET["nu"], "vacuum": 0.0})
            est = decoy_estimate(per, probs, mu, PRESET["nu"])
            rp, vp, hp = passive_rate(est, qz_tot, e_z, p_z, p_z, 1.0, PRESET["d"], PRESET["c_ec"])
            rv, vv, hv = virtual_rate(est, qz_tot, e_z, p_z, p_z, 1.0, PRESET["d"], PRESET["c_ec"])
            gap = (rv - rp) / rv if rv > 0 else float("nan")
            print(f"l={l_km:5.1f}:")
            print("  per-intensity (Q_Z, E_X, Q_cross, errZ_joint):")
            for tag in ("signal", "decoy", "vacuum"):
                print(f"    {tag:7s}", "  ".join(fmt(v) for v in per[tag]))
            print("  Q_Z_total =", fmt(qz_tot), " e_Z =", fmt(e_z))
            print("  decoy: qz0_low=", fmt(est["qz0_low"]), " qz1_low=", fmt(est["qz1_low"]))
            print("         ex1_up =", fmt(est["ex1_up"]), " qc1_up=", fmt(est["qc1_up"]))
            print("  R  =", fmt(rp), " valid=", vp, " h_arg=", fmt(hp) if hp else hp)
            print("  R' =", fmt(rv), " valid=", vv, " h_arg=", fmt(hv) if hv else hv)
            print("  |R-R'|/R' =", fmt(gap))
        # active anchor at p_Z=0.99
        for l_km in (0.0, 50.0):
            fn = lambda m: active_intensity_stats(
                m, l_km, 0.99, PRESET["eta_z"], PRESET["d"], PRESET["e_ch"], 0.99)
            per, qz_tot, e_z = observed(fn, probs, {"signal": mu, "decoy": PRESET["nu"], "vacuum": 0.0})
            est = decoy_estimate(per, probs, mu, PRESET["nu"])
            ra, va, ha = active_rate(est, qz_tot, e_z, 0.99, 0.99, PRESET["c_ec"])
            print(f"active l={l_km:5.1f} p_Z=0.99: Q_Z|mu=", fmt(per["signal"][0]),
                  " E_X|nu=", fmt(per["decoy"][1]))
            print("  Q_Z_total=", fmt(qz_tot), " e_Z=", fmt(e_z),
                  " R_act=", fmt(ra), " valid=", va)

    print()
    print("=" * 78)
    print("SECTION F: sweep pre-verification (grids per spec), p=(1,0,0)")
    print("=" * 78)
    probs = dict(signal=1.0, decoy=0.0, vacuum=0.0)
    lengths = [5.0 * i for i in range(51)]
    table = {}
    for variant in ("active", "passive_r1", "passive_r05", "virtual"):
        rows = []
        for l_km in lengths:
            rate, valid, h_arg, bp, bm = optimize_point(variant, l_km, probs)
            rows.append((l_km, rate, valid, bp, bm))
        table[variant] = rows
        pos = [r for r in rows if r[1] > 0]
        cutoff = pos[-1][0] if pos else None
        print(f"{variant}: R(0)={fmt(rows[0][1])} p_Z(0)={rows[0][3]} mu(0)={rows[0][4]} "
              f"cutoff={cutoff}")
    act = {r[0]: r[1] for r in table["active"]}
    p1 = {r[0]: r[1] for r in table["passive_r1"]}
    p05 = {r[0]: r[1] for r in table["passive_r05"]}
    virt = {r[0]: r[1] for r in table["virtual"]}
    print("\nordering check (R_act >= R_p1 >= R_p05 where lower positive):")
    bad = [(l, act[l], p1[l], p05[l]) for l in act
           if (p1[l] > 0 and act[l] < p1[l]) or (p05[l] > 0 and p1[l] < p05[l])]
    print("  violations:", bad if bad else "none")
    print("\ngap (R_act-R_p1)/R_act at l=0:", fmt((act[0.0] - p1[0.0]) / act[0.0]))
    for variant, tbl in (("passive_r1", p1), ("passive_r05", p05)):
        pos = [l for l in sorted(tbl) if tbl[l] > 0]
        lc = pos[-1]
        print(f"gap at {variant} last positive l={lc}: ",
              fmt((act[lc] - tbl[lc]) / act[lc]))
    print("\nactive optimal p_Z at l=0..50:",
          [r[3] for r in table["active"][:11]])
    pos_p1 = [r for r in table["passive_r1"] if r[1] > 0]
    print("passive_r1 (l, p_Z) last 12 positive:",
          [(r[0], r[3]) for r in pos_p1[-12:]])
    print("\ncriterion-4 gap (R'-R)/R' per length (positive R):")
    for l_km in lengths:
        if p1[l_km] > 0 and virt[l_km] > 0:
            g = (virt[l_km] - p1[l_km]) / virt[l_km]
            flag = "  <-- >1%" if g >= 0.01 else ""
            print(f"  l={l_km:5.1f}  R={fmt(p1[l_km])}  R'={fmt(virt[l_km])}  "
                  f"gap={g:.6f}{flag}")

    print()
    print("=" * 78)
    print("SECTION G: Monte Carlo cell probability anchors (l=0, mu_A=0.5)")
    print("=" * 78)
    # five-class probabilities for an (intensity, alice-basis) cell,
    # passive preset p_Z=0.9, r=1
    for basis_a in ("Z", "X"):
        mu_a, l_km = 0.5, 0.0
        eta_ch = eta_fiber(l_km)
        eta_z = PRESET["eta_z"]
        d, e_ch = PRESET["d"], PRESET["e_ch"]
        lam_z = mu_a * eta_ch * eta_z * p_z
        lam_x = mu_a * eta_ch * eta_z * 1.0 * (1 - p_z)
        P_Z = 1 - (1 - d) ** 2 * math.exp(-lam_z)
        P_X = 1 - (1 - d) ** 2 * math.exp(-lam_x)
        if basis_a == "Z":
            cc = click(lam_z * (1 - e_ch), d)
            cw = click(lam_z * e_ch, d)
            err = cw * (1 - cc) + 0.5 * cc * cw
            p_match_ok = (P_Z - err) * (1 - P_X)
            p_match_err = err * (1 - P_X)
            p_mismatch = P_X * (1 - P_Z)
        else:
            ccx = click(lam_x * (1 - e_ch), d)
            cwx = click(lam_x * e_ch, d)
            err = cwx * (1 - ccx) + 0.5 * ccx * cwx
            p_match_ok = (P_X - err) * (1 - P_Z)
            p_match_err = err * (1 - P_Z)
            p_mismatch = P_Z * (1 - P_X)
        p_cross = P_Z * P_X
        p_none = (1 - P_Z) * (1 - P_X)
        tot = p_match_ok + p_match_err + p_mismatch + p_cross + p_none
        print(f"alice={basis_a}: ok={fmt(p_match_ok)} err={fmt(p_match_err)}")
        print(f"  mismatch={fmt(p_mismatch)} cross={fmt(p_cross)} none={fmt(p_none)}")
        print(f"  sum={fmt(tot)}")


if __name__ == "__main__":
    main()
