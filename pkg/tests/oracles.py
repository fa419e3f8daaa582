"""Independent reference implementations used as test oracles.

These are deliberately naive: dense matrices, explicit double loops and
direct trigonometry, with no shared code from the package kernels.
"""
import math

import numpy as np


def heaviside(x, eps1, eps2):
    arg = min(max((x - eps1) / eps2, -50.0), 50.0)
    return 0.5 * (1.0 + math.tanh(arg))


def global_rhs_oracle(scn, y):
    nB, nR = scn.blue_graph.n, scn.red_graph.n
    B = scn.blue_graph.adjacency
    R = scn.red_graph.adjacency
    A = scn.engagement.matrix  # (nB, nR)
    thB, thR = y[:nB], y[nB:nB + nR]
    pB, pR = y[nB + nR], y[nB + nR + 1]

    def g(p, p0):
        if scn.feedback == "focus_loss":
            return p / p0
        if scn.feedback == "effort_gain":
            return 1.0 / (p / p0 + 1e-3)
        return 1.0

    fB = pB / scn.p_B0 if scn.intra_feedback == "focus_loss" else 1.0
    fR = pR / scn.p_R0 if scn.intra_feedback == "focus_loss" else 1.0
    gB, gR = g(pB, scn.p_B0), g(pR, scn.p_R0)

    out = np.zeros(nB + nR + 2)
    for i in range(nB):
        s = 0.0
        for j in range(nB):
            s += fB * scn.sigma_B * B[i, j] * math.sin(thB[i] - thB[j])
        for j in range(nR):
            s += gB * scn.zeta_BR * A[i, j] * math.sin(thB[i] - thR[j] - scn.phi_BR)
        out[i] = scn.omega_B[i] - s
    for i in range(nR):
        s = 0.0
        for j in range(nR):
            s += fR * scn.sigma_R * R[i, j] * math.sin(thR[i] - thR[j])
        for j in range(nB):
            s += gR * scn.zeta_RB * A[j, i] * math.sin(thR[i] - thB[j] - scn.phi_RB)
        out[nB + i] = scn.omega_R[i] - s

    O_B = abs(sum(complex(math.cos(t), math.sin(t)) for t in thB)) / nB
    O_R = abs(sum(complex(math.cos(t), math.sin(t)) for t in thR)) / nR
    delta = sum(thB) / nB - sum(thR) / nR
    out[nB + nR] = (-scn.kappa_RB * O_R * (1 - math.sin(delta)) / 2 * pR
                    * heaviside(pB, scn.eps1, scn.eps2))
    out[nB + nR + 1] = (-scn.kappa_BR * O_B * (1 + math.sin(delta)) / 2 * pB
                        * heaviside(pR, scn.eps1, scn.eps2))
    return out


def networked_rhs_oracle(scn, y):
    nB, nR = scn.blue_graph.n, scn.red_graph.n
    n = nB + nR
    M = np.zeros((n, n))
    M[:nB, :nB] = scn.blue_graph.adjacency
    M[nB:, nB:] = scn.red_graph.adjacency
    E = np.zeros((n, n))
    E[:nB, nB:] = scn.engagement.matrix
    E[nB:, :nB] = scn.engagement.matrix.T
    th, p = y[:n], y[n:]
    H = [heaviside(v, scn.eps1, scn.eps2) for v in p]
    blue = [i < nB for i in range(n)]
    Gamma = np.zeros((n, n))
    for i in range(n):
        for h in range(n):
            if M[i, h]:
                Gamma[i, h] = scn.gamma_B if blue[i] else scn.gamma_R

    O = np.zeros(n)
    delta = np.zeros(n)
    d = np.zeros(n)
    for k in range(n):
        z = sum(M[k, m] * H[m] * complex(math.cos(th[m]), math.sin(th[m])) for m in range(n))
        w = sum(M[k, m] * H[m] for m in range(n))
        O[k] = (abs(z) + scn.eps2) / (w + scn.eps2)
        delta[k] = 1.0 / (sum(E[k, m] * p[m] for m in range(n)) + scn.standing_force)
        d[k] = 1.0 / (sum(E[k, m] * H[m] for m in range(n)) + scn.eps2)

    pair = scn.feedback == "pairwise"
    out = np.zeros(2 * n)
    for i in range(n):
        if p[i] <= scn.extinction_threshold:
            continue
        s = 0.0
        for j in range(n):
            if M[i, j]:
                sig = scn.sigma_B if blue[i] else scn.sigma_R
                w = 2 * p[j] / (p[i] + p[j]) if pair and p[i] + p[j] != 0 else 1.0
                s += H[j] * sig * w * math.sin(th[i] - th[j])
            if E[i, j]:
                zeta = scn.zeta_BR if blue[i] else scn.zeta_RB
                phi = scn.phi_BR if blue[i] else scn.phi_RB
                w = 2 * p[i] / (p[i] + p[j]) if pair and p[i] + p[j] != 0 else 1.0
                s += H[j] * zeta * w * math.sin(th[i] - th[j] - phi)
        out[i] = H[i] * (scn.omega[i] - s)
        flow = 0.0
        for h in range(n):
            flow += (M[i, h] * H[h] * (Gamma[i, h] + Gamma[h, i]) / 2
                     * (delta[h] * p[h] - delta[i] * p[i]) * (math.cos(th[h] - th[i]) + 1) / 2)
        attr = 0.0
        for k in range(n):
            kappa = scn.kappa_RB if blue[i] else scn.kappa_BR
            attr += (E[i, k] * H[k] * kappa * p[k] * d[k]
                     * (math.sin(th[k] - th[i]) + 1) / 2 * O[k])
        out[n + i] = H[i] * (flow - attr)
    return out
