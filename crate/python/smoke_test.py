"""Smoke test for the rotbath extension module. Run after installing it."""

import math
import pathlib
import tempfile

import rotbath

ROOT = pathlib.Path(__file__).resolve().parent.parent


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    bath = rotbath.Bath.flat(1.0, omega_rot=1.0, level=2.0)
    mode = rotbath.Mode(1.0 - math.log(2.0), m=1)
    r = rotbath.rates(bath, mode)
    close(r.gamma_down, 1.0, 1e-12)
    close(r.gamma_up, 2.0, 1e-12)
    assert r.classification == "superradiant"
    assert rotbath.classify(bath, mode) == "superradiant"
    assert rotbath.local_beta(bath, mode) < 0

    times = [0.0, 0.5, 1.0, 2.0]
    run = rotbath.evolve_mean(mode, r, 0.0, times)
    for t, n in zip(run["times"], run["nbar"]):
        close(n, rotbath.closed_form_mean(r, "bose", 0.0, t), 1e-8)

    dist = rotbath.evolve_distribution(mode, r, 0, times)
    for t, n in zip(dist["times"], dist["mean"]):
        close(n, rotbath.closed_form_mean(r, "bose", 0.0, t), 1e-6)
    assert dist["status"] == "complete"

    g1 = rotbath.gillespie(r, "bose", 0, times, 2000, seed=1, kappa=0.1)
    g2 = rotbath.gillespie(r, "bose", 0, times, 2000, seed=1, kappa=0.1)
    assert g1["mean"] == g2["mean"]

    n_star = rotbath.saturation_fixed_point(rotbath.RateSet.from_rates(1.0, 2.0), 0.1)
    close(n_star, 11.7082, 1e-4)

    cold = rotbath.Bath.flat("inf", omega_rot=0.5)
    lines = rotbath.emission_spectrum(cold, [rotbath.Mode(w, m=1) for w in (0.2, 0.5, 0.9)])
    assert [rate > 0 for _, rate, _ in lines] == [True, False, False]

    ohmic = rotbath.Bath.ohmic(1.0, omega_rot=0.3)
    assert ohmic.kms_residual() < 1e-12
    ledger = rotbath.thermo_ledger(ohmic, [rotbath.Mode(1.0, m=1)], [2], [0.5, 1.0, 2.0])
    assert all(row["sigma"] >= 0 for row in ledger)

    assert rotbath.bh_ledger([(0.5, 1, 1.0)], 1.0, 1.0) == (-0.5, -1.0, 2.0)
    assert rotbath.shear_classify(2.0, 1.0) == "unstable"
    assert rotbath.energy_split(2.0, 1.0) == (0.5, 0.5)
    assert rotbath.comoving_frequency(1.0, 2.0, 1.0) == -1.0

    text = (ROOT / "scenarios" / "shear.toml").read_text()
    printed = rotbath.check_scenario(text)
    assert rotbath.check_scenario(printed) == printed
    with tempfile.TemporaryDirectory() as out:
        outcome, files = rotbath.run_scenario(str(ROOT / "scenarios" / "rates_ohmic.toml"), out=out)
        assert outcome == "complete" and len(files) == 1

    try:
        rotbath.Mode(-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative energy accepted")

    print("rotbath", rotbath.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
