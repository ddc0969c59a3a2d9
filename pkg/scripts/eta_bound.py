"""Contractive error radius for the amplitude case, over the window [varrho, T_f].

usage: python3 scripts/eta_bound.py
"""
import numpy as np

from qswitch.certificates import FtcsCertificate, eta_bound
from qswitch.scenarios import PRESETS, load_preset

cfg = load_preset("amplitude")
node = cfg.certificates.ftcs
cert = FtcsCertificate(cfg.controller.gamma, cfg.controller.theta_hat, node["alpha1"], node["alpha2"],
                       node["b1"], node["varrho"], cfg.simulation.T_f)
lam2 = float(np.linalg.eigvalsh(cfg.controller.P).min())
for t in np.linspace(cert.varrho, cert.T_f, 7):
    print(f"t = {t:5.2f}  eta = {eta_bound(cert, lam2, t):.5f}")
print(f"reference value quoted for T_f: {PRESETS['amplitude']['meta']['reference']['eta']}")
