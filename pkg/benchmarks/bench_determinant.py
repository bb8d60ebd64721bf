# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

import os
import time
import tracemalloc
import numpy as np
import matplotlib.pyplot as plt
import loopsoup as ls

MB = 1024 * 1024
MAX_DENSE = 4_000
MAX_SPARSE = 250_000
RUNS = 3
MAX_POINTS = 16

overwrite = False


class Profiler:
    """Measures the wall time and the traced memory of a block."""

    def __init__(self):
        self._timefunc = time.perf_counter
        self._t0 = 0.0
        self._m0 = 0

    @property
    def seconds(self) -> float:
        return self._timefunc() - self._t0

    @property
    def memory(self) -> int:
        return tracemalloc.get_traced_memory()[1] - self._m0

    def start(self):
        tracemalloc.start()
        tracemalloc.reset_peak()
        self._m0 = tracemalloc.get_traced_memory()[0]
        self._t0 = self._timefunc()

    def stop(self):
        tracemalloc.stop()


def _sizes(max_vertices):
    total = np.geomspace(16, max_vertices, MAX_POINTS)
    return np.unique(np.sqrt(total).astype(np.int64) - 1)


def bench_logdet(method, max_vertices, runs=RUNS):
    """Time and peak memory of ``log det(I - P)`` on ``n x n`` boxes."""
    profiler = Profiler()
    sizes = _sizes(max_vertices)
    data = np.zeros((len(sizes), 3))
    for i, n in enumerate(sizes):
        dom = ls.build_domain({"shape": "square", "n": int(n), "mesh": 1.0})
        line = ls.defect_line(dom, dom.faces[len(dom.faces) // 2])
        mat = ls.build_transition_matrix(dom, [line])
        t, mem = 0.0, 0.0
        for _ in range(runs):
            profiler.start()
            ls.log_det_one_minus(mat, method)
            t += profiler.seconds
            mem += profiler.memory
            profiler.stop()
        data[i] = dom.num_vertices, t / runs, mem / runs
    return data


def bench_sampler(max_vertices, lam=0.5, runs=RUNS):
    """Time of the first soup (including the decomposition) and of later soups."""
    sizes = _sizes(max_vertices)
    data = np.zeros((len(sizes), 3))
    for i, n in enumerate(sizes):
        dom = ls.build_domain({"shape": "square", "n": int(n), "mesh": 1.0})
        t0 = time.perf_counter()
        ls.sample_loop_soup(dom, lam, seed=0, replica=0)
        first = time.perf_counter() - t0
        t0 = time.perf_counter()
        for r in range(runs):
            ls.sample_loop_soup(dom, lam, seed=0, replica=r + 1)
        data[i] = dom.num_vertices, first, (time.perf_counter() - t0) / runs
    return data


def plot_benchmarks(data):
    fig1, ax1 = plt.subplots()
    fig2, ax2 = plt.subplots()
    fig3, ax3 = plt.subplots()
    for ax in (ax1, ax2, ax3):
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.grid()
        ax.set_xlabel("V")

    for name in ("dense", "sparse"):
        arr = data[name]
        ax1.plot(arr[:, 0], arr[:, 1], label=name)
        ax2.plot(arr[:, 0], arr[:, 2] / MB, label=name)
    arr = data["sampler"]
    ax3.plot(arr[:, 0], arr[:, 1], label="first soup")
    ax3.plot(arr[:, 0], arr[:, 2], label="later soups")

    ax1.set_ylabel("Time (s)")
    ax2.set_ylabel("Peak memory (MB)")
    ax3.set_ylabel("Time (s)")
    for ax in (ax1, ax2, ax3):
        ax.legend()
    fig1.tight_layout()
    fig2.tight_layout()
    fig3.tight_layout()

    fig1.savefig("bench_logdet_time.png")
    fig2.savefig("bench_logdet_memory.png")
    fig3.savefig("bench_sampler_time.png")


def main():
    file = "benchmark_determinant.npz"
    if overwrite or not os.path.exists(file):
        data = dict()
        print("Benchmarking log-determinant: dense")
        data["dense"] = bench_logdet("dense", MAX_DENSE)
        print("Benchmarking log-determinant: sparse")
        data["sparse"] = bench_logdet("sparse", MAX_SPARSE)
        print("Benchmarking sampler")
        data["sampler"] = bench_sampler(MAX_DENSE)
        np.savez(file, **data)
    else:
        data = np.load(file)

    plot_benchmarks(data)
    plt.show()


if __name__ == "__main__":
    main()
