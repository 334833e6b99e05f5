"""Compiled kernel versus numpy fallback on the circuit hot paths.

    python benchmarks/bench_kernels.py [--batch 128] [--repeat 20]

Times the forward expectations and the adjoint gradient for the three-qubit,
two-layer, five-latent layout, then one full training epoch on each backend.
"""
import argparse
import timeit

import numpy as np

from styleqgan import _core, _fallback
from styleqgan.data import fit_minmax, sample_gaussian3d
from styleqgan.generator import CircuitLayout, QuantumGenerator
from styleqgan.training import TrainingConfig, train


def _use(impl):
    _core.final_states = impl.final_states
    _core.expectations = impl.expectations
    _core.angle_vjp = impl.angle_vjp


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--epochs", type=int, default=50)
    args = ap.parse_args()

    impls = [("python", _fallback)]
    if _core.compiled is not None:
        impls.append(("compiled", _core.compiled))
    else:
        print("compiled extension not built; timing the fallback only")

    rng = np.random.default_rng(0)
    layout = CircuitLayout(3, 2, 5)
    gen = QuantumGenerator(layout)
    params = rng.normal(size=gen.n_params)
    zs = rng.normal(size=(args.batch, layout.d_latent))
    cot = rng.normal(size=(args.batch, layout.n_qubits))
    raw = sample_gaussian3d(2000, rng)
    real = fit_minmax(raw).transform(raw.values)
    config = TrainingConfig(CircuitLayout(3, 2, 5), epochs=args.epochs, batch_size=args.batch, log_every=0)

    rows = {}
    for name, impl in impls:
        _use(impl)
        rows[name] = (
            _best(lambda: gen.expectations(params, zs), args.repeat),
            _best(lambda: gen.param_vjp(params, zs, cot), args.repeat),
            _best(lambda: train(config, real), 3) / args.epochs,
        )
    _use(_core.impl)

    print(f"layout (3 qubits, 2 layers, d_latent 5), batch {args.batch}; best of {args.repeat}, milliseconds")
    print(f"{'backend':10s}{'forward':>12s}{'gradient':>12s}{'epoch':>12s}")
    for name, times in rows.items():
        print(f"{name:10s}" + "".join(f"{1e3 * t:12.3f}" for t in times))
    if len(rows) == 2:
        speedup = [p / c for p, c in zip(rows["python"], rows["compiled"])]
        print(f"{'speedup':10s}" + "".join(f"{s:11.1f}x" for s in speedup))


if __name__ == "__main__":
    main()
