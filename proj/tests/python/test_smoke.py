"""Smoke tests for the python extension and the CLI binary."""

import json
import math
import os
import subprocess
import sys
import tempfile

import numpy as np

import _sparsekey as sk


def check(condition, message):
    if not condition:
        print("[FAIL]", message)
        sys.exit(1)
    print("[ok]", message)


def test_module():
    a = np.array([[1.0, 0.0], [0.0, 1.0]])
    b = np.zeros((2, 2))
    check(abs(sk.distortion(a, b) - 0.5) < 1e-15, "distortion hand value")

    t = sk.Thresholds()
    check(sk.validate_config(t) == [], "default thresholds validate")
    t.lambda4 = 1.5
    check(len(sk.validate_config(t)) == 1, "violation reported as data")

    # edge into triangle
    density = sk.hom_density(2, [(0, 1)], 3, [(0, 1), (1, 2), (2, 0)])
    check(abs(density - 2.0 / 3.0) < 1e-15, "hom density of the edge in the triangle")

    check(abs(sk.mi_bob(3.0) - 1.0) < 1e-15, "gaussian channel MI at omega 3")
    rate = sk.key_rate(0.5, 4, [12.0], 0.25)
    expect = 2.0 + 2.0 * (1.0 - 0.5 * math.log2(1.75))
    check(abs(rate - expect) < 1e-12, "key-rate worked example")

    joint = np.array([[0.4, 0.1], [0.1, 0.4]])
    check(abs(sk.mutual_information(joint) - 0.27807190511263774) < 1e-12, "plug-in MI")

    state = np.ones((2, 2))
    stepped = sk.ou_step(state, 1.0, 0.0, 0.25, 7)
    check(np.allclose(stepped, 0.75 * state, atol=0), "noise-free OU contraction")

    # determinism across calls with the same seed
    p1 = sk.sample_patterns(4, 0.5, 32, 123)
    p2 = sk.sample_patterns(4, 0.5, 32, 123)
    check(p1 == p2, "pattern sampling is seed-deterministic")
    check(len(p1[1]) == 4, "eavesdropper pattern keeps size sigma")

    base = np.diag([1.0, 1.0])
    point = np.diag([math.e, math.e**2])
    tangent = sk.riemannian_log(base, point)
    check(np.allclose(np.diag(tangent), [1.0, 2.0], atol=1e-12), "riemannian log hand value")
    back = sk.riemannian_exp(base, tangent)
    check(np.allclose(back, point, atol=1e-10), "riemannian exp inverts log")

    psd, min_eig = sk.bochner_check(lambda d: math.exp(-0.5 * d * d), [0.0, 0.7, 1.9, 3.2], 1e-10)
    check(psd and min_eig >= -1e-10, "gaussian kernel bochner check")

    atoms, code, history = sk.solve_p1(np.eye(4), sk.Thresholds(), 0.0, 10, 5)
    check(all(history[i + 1] <= history[i] + 1e-9 for i in range(len(history) - 1)),
          "solver history is non-increasing")

    all_pass, report = sk.run_verifiers(1)
    check(all_pass, "verifier sweep passes")
    check(json.loads(report)["all_pass"], "verifier report parses")


def test_cli():
    cli = os.environ.get("SPARSEKEY_CLI")
    if not cli:
        print("[skip] SPARSEKEY_CLI not set")
        return

    with tempfile.TemporaryDirectory() as tmp:
        out_a = os.path.join(tmp, "a.csv")
        out_b = os.path.join(tmp, "b.csv")
        env = dict(os.environ, SPARSEKEY_NSAMPLES="32", SPARSEKEY_ITERS="15")
        for out in (out_a, out_b):
            r = subprocess.run([cli, "fig3", "--seed", "9", "--out", out], env=env)
            check(r.returncode == 0, "fig3 exit code 0")
        with open(out_a, "rb") as fa, open(out_b, "rb") as fb:
            check(fa.read() == fb.read(), "fig3 CSV byte-identical across runs")

        verify_out = os.path.join(tmp, "verify.json")
        r = subprocess.run([cli, "verify", "--out", verify_out])
        check(r.returncode == 0, "verify exit code 0")
        with open(verify_out) as f:
            check(json.load(f)["all_pass"], "verify report all_pass")

        bad = os.path.join(tmp, "bad.cfg")
        with open(bad, "w") as f:
            f.write("kappa_e = 2.5\n")
        r = subprocess.run([cli, "fig3", "--config", bad], capture_output=True)
        check(r.returncode == 1, "config error maps to exit code 1")

        infeasible = os.path.join(tmp, "infeasible.cfg")
        with open(infeasible, "w") as f:
            f.write("lambda2 = 0\nnsamples = 24\niters = 10\n")
        r = subprocess.run([cli, "solve", "--config", infeasible], capture_output=True)
        check(r.returncode == 2, "infeasibility maps to exit code 2")

        keyrate = subprocess.run([cli, "keyrate"], capture_output=True, text=True)
        check(keyrate.returncode == 0 and keyrate.stdout.startswith("keyrate"),
              "keyrate prints a labeled value")


if __name__ == "__main__":
    test_module()
    test_cli()
    print("smoke tests passed")
