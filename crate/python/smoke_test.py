#!/usr/bin/env python3
"""Smoke test for the proxflow_py extension.

Builds the cdylib (set PROXFLOW_SKIP_BUILD=1 to reuse an existing build),
loads it, and exercises the main surface end to end: proximal operators,
presets, simulation, the discrete reference solver, and the settling-time
certificates.
"""
import math
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def locate_library():
    if os.environ.get("PROXFLOW_SKIP_BUILD") != "1":
        subprocess.run(
            ["cargo", "build", "-p", "proxflow-py", "--release"],
            cwd=ROOT,
            check=True,
        )
    names = ["libproxflow_py.so", "libproxflow_py.dylib", "proxflow_py.dll"]
    for profile in ("release", "debug"):
        for name in names:
            candidate = os.path.join(ROOT, "target", profile, name)
            if os.path.exists(candidate):
                return candidate
    raise SystemExit("extension library not found; run: cargo build -p proxflow-py")


def import_extension():
    lib = locate_library()
    staging = tempfile.mkdtemp(prefix="proxflow_py_")
    suffix = ".pyd" if lib.endswith(".dll") else ".so"
    shutil.copy(lib, os.path.join(staging, "proxflow_py" + suffix))
    sys.path.insert(0, staging)
    import proxflow_py

    return proxflow_py


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    px = import_extension()
    print(f"loaded proxflow_py {px.__version__}")

    # Proximal operators.
    assert px.prox("l1", [1.2, -0.3, 0.5], 0.5, weight=1.0) == [0.7, 0.0, 0.0]
    assert px.prox("indicator_nonneg", [-1.0, 2.0], 0.3) == [0.0, 2.0]
    assert px.prox("indicator_box", [4.0, -4.0], 1.0, lo=[0.0, 0.0], hi=[1.0, 1.0]) == [1.0, 0.0]
    print("prox operators ok")

    # Contraction factor.
    assert close(px.contraction_factor(0.1, 1.0, 1.0), 1.0 / math.sqrt(1.19), 1e-12)
    try:
        px.contraction_factor(0.5, 1.2679, 5.7321)
        raise SystemExit("expected refusal outside the contraction regime")
    except RuntimeError:
        pass
    print("contraction factor ok")

    # Benchmark preset and simulation.
    problem = px.Problem.from_preset("example1-ncp")
    assert problem.dim == 5 and close(problem.mu, 0.5, 1e-15)
    w_star = problem.known_solution
    assert problem.residual_norm(w_star) < 1e-12
    traj = px.simulate(problem, [5.0, 1.0, 2.0, 4.0, -2.5])
    assert traj.terminated == "settled", traj
    assert traj.final_error() < 1e-6
    t_settle = px.detect_settling(traj, 1e-6)
    assert t_settle is not None and t_settle <= 2.0
    print(f"simulation ok (settled at t={t_settle:.4f}, error {traj.final_error():.2e})")

    # Discrete reference solver agrees with the pinned solution.
    solution, iterations, converged = px.forward_backward_solve(problem, [5.0, 1.0, 2.0, 4.0, -2.5])
    assert converged
    err = max(abs(a - b) for a, b in zip(solution, w_star))
    assert err < 1e-6, err
    print(f"reference solver ok ({iterations} iterations, error {err:.2e})")

    # Disturbed run stays bounded and still settles.
    traj_d = px.simulate(problem, [5.0, 1.0, 2.0, 4.0, -2.5], disturbance_q=0.3)
    assert traj_d.terminated == "settled"
    assert traj_d.final_error() < 1e-4
    print("disturbed simulation ok")

    # Certificates on the certified preset.
    linear = px.Problem.from_preset("linear-sym")
    gains = linear.default_gains
    rho = linear.default_rho
    cert = px.settling_bound_const(
        gains[0], gains[1], gains[2], rho[0], rho[1], linear.mu, 1.0, 2.0
    )
    assert cert["feasible"] == 1.0 and cert["bound_t"] > 0.0
    tv = px.settling_bound_tv([0.0, 50.0], [0.0, 30.0], 0.5, 1.6, 0.4, 1.0, 2.0)
    assert tv["feasible"] == 1.0 and tv["bound_t"] > 0.0
    print(f"certificates ok (constant-gain bound {cert['bound_t']:.3f})")

    print("smoke test passed")


if __name__ == "__main__":
    main()
