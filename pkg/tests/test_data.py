import math

import numpy as np
import pytest

from privtsf.data import (
    BinnedWindow,
    ConfigurationError,
    DataPoint,
    Episode,
    MetricsRow,
    ParseError,
    Standardizer,
    Triplet,
    ValidationError,
    bin_episode,
    build_windows,
    load_triplets,
    read_metrics_csv,
    sliding_windows,
    split_by_episode,
    write_report_csv,
    write_roc_csv,
    write_triplets,
)
from privtsf.synth import GeneratorConfig, generate


def ep(eid, trips, length):
    return Episode(episode_id=eid, triplets=tuple(Triplet(*t) for t in trips), length_hours=length)


class TestBinning:
    def test_first_observation_per_hour_wins(self):
        e = ep(1, [(0.2, 0, 80.0), (0.7, 0, 90.0)], 48.0)
        w = bin_episode(e, 0, 24, 24, Standardizer.identity(4))
        assert w.values[0, 0] == 80.0
        assert w.mask_in[0, 0] == 1.0

    def test_unsorted_ingest_still_keeps_earliest(self):
        e = ep(1, [(0.7, 0, 90.0), (0.2, 0, 80.0)], 48.0)
        w = bin_episode(e, 0, 24, 24, Standardizer.identity(4))
        assert w.values[0, 0] == 80.0

    def test_unobserved_variable_yields_zero_column(self):
        e = ep(1, [(0.5, 0, 80.0)], 48.0)
        w = bin_episode(e, 0, 24, 24, Standardizer.identity(4))
        assert np.all(w.values[:, 3] == 0)
        assert np.all(w.mask_in[:, 3] == 0)

    def test_zscore_storage(self):
        std = Standardizer(mean=np.array([70.0]), std=np.array([10.0]))
        e = ep(1, [(0.5, 0, 80.0)], 48.0)
        w = bin_episode(e, 0, 24, 24, std)
        assert w.values[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_target_block_follows_same_rule(self):
        e = ep(1, [(25.3, 1, 5.0), (25.9, 1, 7.0)], 48.0)
        w = bin_episode(e, 0, 24, 24, Standardizer.identity(4))
        assert w.target[1, 1] == 5.0
        assert w.mask_out[1, 1] == 1.0

    def test_window_start_shifts_bucket_origin(self):
        e = ep(1, [(4.5, 0, 3.0)], 60.0)
        w = bin_episode(e, 4, 24, 24, Standardizer.identity(2))
        assert w.values[0, 0] == 3.0
        assert w.window_start == 4

    def test_window_beyond_stay_is_config_error(self):
        e = ep(1, [(0.5, 0, 1.0)], 40.0)
        with pytest.raises(ConfigurationError):
            bin_episode(e, 0, 24, 24, Standardizer.identity(2))

    def test_variable_out_of_range_is_config_error(self):
        e = ep(1, [(0.5, 3, 1.0)], 48.0)
        with pytest.raises(ConfigurationError):
            bin_episode(e, 0, 24, 24, Standardizer.identity(2))

    def test_idempotence_on_hour_aligned_episode(self):
        rng = np.random.default_rng(3)
        trips = [(float(h), f, float(rng.standard_normal())) for h in range(30) for f in range(3)]
        e = ep(1, trips, 48.0)
        w = bin_episode(e, 0, 24, 6, Standardizer.identity(3))
        grid = np.array([[v for (_, _, v) in trips[h * 3 : h * 3 + 3]] for h in range(24)])
        assert np.allclose(w.values, grid)
        assert np.all(w.mask_in == 1)

    def test_densification_loss_accounting(self):
        # discarded triplets == total triplets - set mask bits for full-stay binning
        rng = np.random.default_rng(4)
        trips = []
        for _ in range(200):
            trips.append((float(rng.uniform(0, 20)), int(rng.integers(0, 3)), float(rng.standard_normal())))
        e = ep(1, trips, 20.0)
        w = bin_episode(e, 0, 20, 0, Standardizer.identity(3))
        discarded = len(trips) - int(w.mask_in.sum())
        keys = {(math.floor(t), f) for t, f, _ in trips}
        assert discarded == len(trips) - len(keys)

    def test_mask_value_consistency_full_scan(self):
        episodes = generate(GeneratorConfig(n_episodes=25, seed=9))
        std = Standardizer.fit(episodes, 16)
        for _, w in build_windows(episodes, std):
            assert np.all(w.values[w.mask_in == 0] == 0)
            assert np.all(w.target[w.mask_out == 0] == 0)


class TestSlidingWindows:
    def test_96_hour_stay(self):
        e = ep(1, [(0.0, 0, 1.0)], 96.0)
        starts = sliding_windows(e, stride=4, input_len=24, horizon=24, max_start=96)
        assert starts == [0, 4, 8, 12, 16, 20, 24, 28, 32, 36, 40, 44, 48]
        assert len(starts) == 13

    def test_short_stay_gives_empty_sequence(self):
        e = ep(1, [(0.0, 0, 1.0)], 47.0)
        assert sliding_windows(e) == []

    def test_long_stay_caps_at_max_start(self):
        e = ep(1, [(0.0, 0, 1.0)], 1000.0)
        starts = sliding_windows(e)
        assert starts == list(range(0, 97, 4))
        assert len(starts) == 25

    def test_invalid_stride(self):
        e = ep(1, [(0.0, 0, 1.0)], 96.0)
        with pytest.raises(ConfigurationError):
            sliding_windows(e, stride=0)

    def test_empty_target_windows_dropped_by_builder(self):
        # single observation at hour 0: every window's target block is empty
        e = ep(1, [(0.2, 0, 1.0)], 96.0)
        assert build_windows([e], Standardizer.identity(2)) == []


class TestSplit:
    def _episodes(self, count):
        return [ep(i, [(0.0, 0, 1.0)], 96.0) for i in range(count)]

    def test_sizes_and_disjointness(self):
        tr, ho, te = split_by_episode(self._episodes(10), (0.6, 0.2, 0.2), seed=1)
        assert (len(tr), len(ho), len(te)) == (6, 2, 2)
        assert not (tr & ho or tr & te or ho & te)
        assert tr | ho | te == set(range(10))

    def test_deterministic_for_fixed_seed(self):
        eps = self._episodes(30)
        assert split_by_episode(eps, seed=7) == split_by_episode(eps, seed=7)

    def test_patient_level_invariant(self):
        episodes = generate(GeneratorConfig(n_episodes=40, seed=2))
        tr, ho, te = split_by_episode(episodes, seed=3)
        std = Standardizer.fit([e for e in episodes if e.episode_id in tr], 16)
        seen = {}
        for name, ids in (("train", tr), ("heldout", ho), ("test", te)):
            for eid, _ in build_windows([e for e in episodes if e.episode_id in ids], std):
                assert seen.setdefault(eid, name) == name

    def test_every_window_of_episode_in_one_split(self):
        e = ep(5, [(float(h), 0, 1.0) for h in range(96)], 96.0)
        tr, ho, te = split_by_episode([e] + self._episodes(4), (0.6, 0.2, 0.2), seed=0)
        containing = [s for s in (tr, ho, te) if 5 in s]
        assert len(containing) == 1
        windows = build_windows([e], Standardizer.identity(1))
        assert len(windows) == 13

    def test_empty_input(self):
        assert split_by_episode([], seed=0) == (set(), set(), set())

    def test_bad_fractions(self):
        with pytest.raises(ConfigurationError):
            split_by_episode(self._episodes(4), (0.5, 0.2, 0.2), seed=0)


class TestStandardizer:
    def test_round_trip(self):
        episodes = generate(GeneratorConfig(n_episodes=10, seed=1))
        std = Standardizer.fit(episodes, 16)
        rng = np.random.default_rng(0)
        v = rng.standard_normal(100) * 5 + 2
        ids = rng.integers(0, 16, 100)
        back = std.destandardize(std.standardize(v, ids), ids)
        assert np.max(np.abs(back - v)) < 1e-9

    def test_constant_variable_gets_unit_std(self):
        e = ep(1, [(float(h), 0, 42.0) for h in range(10)], 20.0)
        std = Standardizer.fit([e], 2)
        assert std.std[0] == 1.0
        assert std.mean[0] == 42.0
        assert std.std[1] == 1.0  # unseen variable

    def test_nonpositive_std_rejected(self):
        with pytest.raises(ConfigurationError):
            Standardizer(mean=np.zeros(2), std=np.array([1.0, 0.0]))


class TestEpisodeValidation:
    def test_negative_time_rejected(self):
        with pytest.raises(ValidationError):
            ep(1, [(-1.0, 0, 1.0)], 10.0)

    def test_time_beyond_length_rejected(self):
        with pytest.raises(ValidationError):
            ep(1, [(11.0, 0, 1.0)], 10.0)

    def test_triplets_sorted_after_construction(self):
        e = ep(1, [(5.0, 0, 1.0), (1.0, 0, 2.0)], 10.0)
        assert [t.t for t in e.triplets] == [1.0, 5.0]


class TestWindowAndPointTypes:
    def test_mask_must_be_binary(self):
        with pytest.raises(ValidationError):
            BinnedWindow(
                values=np.zeros((2, 1)),
                mask_in=np.full((2, 1), 0.5),
                target=np.zeros((1, 1)),
                mask_out=np.ones((1, 1)),
                window_start=0,
            )

    def test_unobserved_cells_must_hold_zero(self):
        with pytest.raises(ValidationError):
            BinnedWindow(
                values=np.ones((2, 1)),
                mask_in=np.zeros((2, 1)),
                target=np.zeros((1, 1)),
                mask_out=np.ones((1, 1)),
                window_start=0,
            )

    def test_datapoint_arrays_read_only(self):
        p = DataPoint(e=np.zeros((2, 2)), y=np.ones((1, 1)), m=np.ones((1, 1)))
        with pytest.raises(ValueError):
            p.e[0, 0] = 1.0

    def test_datapoint_origin_validated(self):
        with pytest.raises(ValidationError):
            DataPoint(e=np.zeros((2, 2)), y=np.ones((1, 1)), m=np.ones((1, 1)), origin="weird")


class TestTripletIO:
    def test_row_parsing(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("episode_id,t_hours,var_id,value\n7,0.25,3,91.5\n")
        episodes = load_triplets(str(path), n_vars=4)
        assert len(episodes) == 1
        e = episodes[0]
        assert e.episode_id == 7
        assert e.triplets == (Triplet(0.25, 3, 91.5),)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("")
        assert load_triplets(str(path), n_vars=4) == []

    def test_header_only(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("episode_id,t_hours,var_id,value\n")
        assert load_triplets(str(path), n_vars=4) == []

    def test_negative_time_names_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("episode_id,t_hours,var_id,value\n1,0.5,0,1.0\n1,-2.0,0,1.0\n")
        with pytest.raises(ValidationError, match=":3:"):
            load_triplets(str(path), n_vars=4)

    def test_malformed_row_names_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("episode_id,t_hours,var_id,value\n1,abc,0,1.0\n")
        with pytest.raises(ParseError, match=":2:"):
            load_triplets(str(path), n_vars=4)

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("episode_id,t_hours,var_id,value\n1,0.5,0\n")
        with pytest.raises(ParseError, match="4 fields"):
            load_triplets(str(path), n_vars=4)

    def test_unknown_variable_index(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("episode_id,t_hours,var_id,value\n1,0.5,9,1.0\n")
        with pytest.raises(ValidationError, match="variable index 9"):
            load_triplets(str(path), n_vars=4)

    def test_write_load_round_trip(self, tmp_path):
        episodes = generate(GeneratorConfig(n_episodes=5, seed=3))
        path = tmp_path / "corpus.csv"
        write_triplets(episodes, str(path))
        loaded = load_triplets(str(path), n_vars=16)
        assert len(loaded) == len(episodes)
        for a, b in zip(episodes, loaded):
            assert a.episode_id == b.episode_id
            assert len(a.triplets) == len(b.triplets)
            for ta, tb in zip(a.triplets, b.triplets):
                assert ta == tb


class TestReportIO:
    def _row(self, **kw):
        base = dict(
            run_id="r1",
            method="zoo",
            alpha_or_beta="0.75",
            epoch=1,
            mse_test=0.5,
            mse_heldout=0.6,
            tpr_at_tau=0.1,
            fpr_at_tau=0.05,
            priv_ratio=2.0,
            auroc=0.7,
            tau=0.55,
        )
        base.update(kw)
        return MetricsRow(**base)

    def test_metrics_round_trip_including_inf(self, tmp_path):
        rows = [self._row(), self._row(epoch=2, priv_ratio=math.inf, mse_test=1 / 3)]
        path = tmp_path / "metrics.csv"
        write_report_csv(rows, str(path))
        back = read_metrics_csv(str(path))
        assert back == rows
        assert "inf" in path.read_text()

    def test_append_mode_keeps_single_header(self, tmp_path):
        path = tmp_path / "metrics.csv"
        write_report_csv([self._row()], str(path))
        write_report_csv([self._row(epoch=2)], str(path), append=True)
        text = path.read_text()
        assert text.count("run_id") == 1
        assert len(read_metrics_csv(str(path))) == 2

    def test_roc_csv_format(self, tmp_path):
        path = tmp_path / "roc.csv"
        write_roc_csv([(-math.inf, 0.0, 0.0), (0.5, 0.25, 0.75), (math.inf, 1.0, 1.0)], str(path))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "threshold,fpr,tpr"
        assert lines[1].startswith("-inf")
        assert lines[-1].startswith("inf")
