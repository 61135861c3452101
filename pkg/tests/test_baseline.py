"""Dense reference and the unfused comparator."""

import numpy as np
import pytest

from sinkwmd.baseline import sinkhorn_wmd_dense, unfused_sparse_wmd
from sinkwmd.kernels import EmptyQueryError
from sinkwmd.solver import SolverConfig, sinkhorn_wmd
from sinkwmd.sparse import csr_from_triplets
from sinkwmd.synth import random_instance

from conftest import max_rel_err


class TestDenseReference:
    vecs = np.array([[0.0, 0.0], [1.0, 0.0]])

    def test_identical_singletons(self):
        corpus = csr_from_triplets([(0, 0, 1.0)], 2, 1)
        wmd = sinkhorn_wmd_dense(np.array([1.0, 0.0]), corpus.to_dense(),
                                 self.vecs, SolverConfig(lam=1.0, max_iter=15))
        assert abs(wmd[0]) <= 1e-12

    def test_distance_one_singletons(self):
        # all mass moves across a unit gap, so the cost is exactly 1
        corpus = csr_from_triplets([(1, 0, 1.0)], 2, 1)
        wmd = sinkhorn_wmd_dense(np.array([1.0, 0.0]), corpus.to_dense(),
                                 self.vecs, SolverConfig(lam=1.0, max_iter=1))
        assert abs(wmd[0] - 1.0) <= 1e-12

    def test_empty_query(self):
        corpus = csr_from_triplets([(0, 0, 1.0)], 2, 1)
        with pytest.raises(EmptyQueryError):
            sinkhorn_wmd_dense(np.zeros(2), corpus.to_dense(), self.vecs,
                               SolverConfig(lam=1.0))


class TestUnfusedComparator:
    def test_matches_dense(self):
        for seed in range(4):
            inst = random_instance(seed, n_vocab=48, n_docs=12, v_r=6,
                                   dim=6, density=0.25)
            cfg = SolverConfig(lam=10.0, max_iter=15)
            unfused = unfused_sparse_wmd(inst.query, inst.corpus,
                                         inst.embeddings, cfg)
            dense = sinkhorn_wmd_dense(inst.query, inst.corpus.to_dense(),
                                       inst.embeddings, cfg)
            assert max_rel_err(unfused, dense) <= 1e-9

    def test_bitwise_matches_fused_serial_deterministic(self):
        for seed in (10, 11, 12):
            inst = random_instance(seed, n_vocab=40, n_docs=10, v_r=5,
                                   density=0.25)
            cfg = SolverConfig(lam=10.0, max_iter=15, workers=1,
                               deterministic=True)
            unfused = unfused_sparse_wmd(inst.query, inst.corpus,
                                         inst.embeddings, cfg)
            fused = sinkhorn_wmd(inst.query, inst.corpus, inst.embeddings, cfg)
            assert np.array_equal(unfused, fused.wmd)

    def test_timings_recorded(self):
        inst = random_instance(13, n_vocab=30, n_docs=8, v_r=4, density=0.3)
        timings = {}
        unfused_sparse_wmd(inst.query, inst.corpus, inst.embeddings,
                           SolverConfig(lam=1.0, max_iter=3), timings=timings)
        for phase in ("select", "distances", "precompute", "init",
                      "iterations", "final", "total"):
            assert phase in timings


class TestThreeWayAgreement:
    def test_dense_unfused_fused(self):
        for seed in range(6):
            inst = random_instance(100 + seed, n_vocab=64, n_docs=16, v_r=8,
                                   dim=8, density=0.2)
            for lam in (1.0, 10.0):
                cfg = SolverConfig(lam=lam, max_iter=15)
                dense = sinkhorn_wmd_dense(inst.query, inst.corpus.to_dense(),
                                           inst.embeddings, cfg)
                unfused = unfused_sparse_wmd(inst.query, inst.corpus,
                                             inst.embeddings, cfg)
                fused = sinkhorn_wmd(inst.query, inst.corpus,
                                     inst.embeddings, cfg).wmd
                assert max_rel_err(unfused, dense) <= 1e-9
                assert max_rel_err(fused, dense) <= 1e-9
