"""Reference solutions of the two-regime coefficient system.

G[i][k] is the coefficient of the value started in regime i and discounted at
rho_k (g_i = G[i][i], gbar_i = G[i][1-i]).  Solved with scipy's DOP853 as an
implementation-independent check of the C++ RK4 marcher.  Also prints the
system obtained with the alternative cross term (1-gamma) C gbar so the two
readings can be compared.
"""
import sys
import numpy as np
from scipy.integrate import solve_ivp

L = np.array([[-2.0, 2.0], [1.5, -1.5]])


def system(r, mu, sigma, rho, gamma, variant="derived"):
    base = gamma * r + gamma * mu**2 / (2 * sigma**2 * (1 - gamma))

    def rhs(t, y):
        G = y.reshape(2, 2)
        out = np.empty((2, 2))
        for i in range(2):
            C = G[i, i] ** (1.0 / (gamma - 1))
            for k in range(2):
                lin = -(base[i] - rho[k] + L[i, i]) * G[i, k]
                cpl = -sum(L[i, j] * G[j, k] for j in range(2) if j != i)
                if variant == "derived" or k == i:
                    src = gamma * C * G[i, k] - C * G[i, i]
                else:
                    src = -(1 - gamma) * C * G[i, k]
                out[i, k] = lin + src + cpl
        return out.ravel()

    return rhs


def solve(r, rho, gamma, variant="derived", T=1.0):
    mu = np.array([0.1, 0.1])
    sigma = np.array([0.2, 0.2])
    rhs = system(np.array(r), mu, sigma, np.array(rho), gamma, variant)
    sol = solve_ivp(rhs, (T, 0.0), np.ones(4), method="DOP853", rtol=1e-13, atol=1e-15, dense_output=True)
    return sol


if __name__ == "__main__":
    for name, r, rho in [("fig1", [0.05, 0.05], [0.3, 0.06]), ("fig2", [0.01, 0.09], [0.07, 0.06])]:
        for variant in ["derived", "alternative"]:
            sol = solve(r, rho, 0.5, variant)
            G0 = sol.y[:, -1].reshape(2, 2)
            Gh = sol.sol(0.5).reshape(2, 2)
            print(f"{name} {variant}: t=0 g0={G0[0,0]:.15f} g1={G0[1,1]:.15f} gbar0={G0[0,1]:.15f} gbar1={G0[1,0]:.15f}")
            print(f"{name} {variant}: t=.5 g0={Gh[0,0]:.15f} g1={Gh[1,1]:.15f} gbar0={Gh[0,1]:.15f} gbar1={Gh[1,0]:.15f}")
