import numpy as np
import pytest
from scipy import stats

from angleboost.data import (Dataset, GeneratorSpec, SchemaError, TableEncoder, gen_four_class,
                             gen_waveform, generate, load_csv, random_split, read_table,
                             standardize, stratified_split, waveform_basis)


def v1(j):
    return max(6 - abs(j - 11), 0)


class TestWaveform:
    def test_basis_values(self):
        V = waveform_basis(np.arange(1, 22))
        assert V[0, 10] == 6 and V[0, 4] == 0 and V[0, 16] == 0
        assert V[1, 14] == 6 and V[2, 6] == 6
        np.testing.assert_array_equal(V[0], [v1(j) for j in range(1, 22)])
        np.testing.assert_array_equal(V[1], [v1(j - 4) for j in range(1, 22)])
        np.testing.assert_array_equal(V[2], [v1(j + 4) for j in range(1, 22)])

    def test_shape(self):
        ds = gen_waveform(50, seed=1)
        assert ds.X.shape == (50, 21) and ds.K == 3 and set(ds.y) <= {1, 2, 3}

    def test_class_means_monte_carlo(self):
        ds = gen_waveform(50_000, seed=2)
        V = np.array([[v1(j), v1(j - 4), v1(j + 4)] for j in range(1, 22)]).T
        pairs = {1: (0, 1), 2: (0, 2), 3: (1, 2)}
        for k, (a, b) in pairs.items():
            Xk = ds.X[ds.y == k]
            se = Xk.std(axis=0, ddof=1) / np.sqrt(len(Xk))
            expected = (V[a] + V[b]) / 2
            # 63 simultaneous checks: 4 standard errors keeps the family-wise rate negligible
            assert np.all(np.abs(Xk.mean(axis=0) - expected) < 4 * se)

    def test_uniform_labels(self):
        y = gen_waveform(50_000, seed=3).y
        assert stats.chisquare(np.bincount(y)[1:]).pvalue > 0.001

    def test_reproducible(self):
        a, b = gen_waveform(100, seed=7), gen_waveform(100, seed=7)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)


class TestFourClass:
    def test_shape(self):
        ds = gen_four_class(40, seed=0)
        assert ds.X.shape == (40, 10) and ds.K == 4

    def test_means_monte_carlo(self):
        ds = gen_four_class(50_000, seed=4)
        expected = {1: (3, 0), 2: (0, 3), 3: (-3, -3), 4: (0, 0)}
        for k, mu in expected.items():
            Xk = ds.X[ds.y == k]
            se = Xk.std(axis=0, ddof=1) / np.sqrt(len(Xk))
            full = np.zeros(10)
            full[:2] = mu
            assert np.all(np.abs(Xk.mean(axis=0) - full) < 4 * se)
            np.testing.assert_allclose(Xk.std(axis=0), 1.0, atol=0.05)
        X1 = ds.X[ds.y == 1, 0]
        assert abs(X1.mean() - 3) < 3 * X1.std(ddof=1) / np.sqrt(len(X1))

    def test_uniform_labels(self):
        y = gen_four_class(50_000, seed=5).y
        assert stats.chisquare(np.bincount(y)[1:]).pvalue > 0.001

    def test_reproducible(self):
        np.testing.assert_array_equal(gen_four_class(30, 9).X, gen_four_class(30, 9).X)


class TestGenerate:
    def test_split_sizes_and_streams(self):
        spec = GeneratorSpec("waveform", n_train=30, n_test=70, seed=3)
        tr, te = generate(spec, 0)
        assert tr.n == 30 and te.n == 70
        tr2, _ = generate(spec, 0)
        np.testing.assert_array_equal(tr.X, tr2.X)
        other, _ = generate(spec, 1)
        assert not np.array_equal(tr.X, other.X)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            GeneratorSpec("waveform", n_train=0)
        with pytest.raises(ValueError):
            GeneratorSpec("spiral")


class TestDataset:
    def test_label_range(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 1)), np.array([1, 3]), K=2)

    def test_missing_values_rejected(self):
        with pytest.raises(ValueError):
            Dataset(np.array([[np.nan]]), np.array([1]), K=2)

    def test_export_round_trip(self, tmp_path):
        ds = gen_four_class(25, seed=1)
        ds.to_csv(tmp_path / "d.csv")
        header, _ = read_table(tmp_path / "d.csv")
        assert header[-1] == "label"
        back = load_csv(tmp_path / "d.csv", "label")
        np.testing.assert_array_equal(back.X, ds.X)
        np.testing.assert_array_equal(back.y, ds.y)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_numeric_unchanged(self, tmp_path):
        p = write(tmp_path / "a.csv", "x,y,cls\n1.5,2,a\n-3,4e-2,b\n0,7,a\n")
        ds = load_csv(p, "cls")
        np.testing.assert_array_equal(ds.X, [[1.5, 2], [-3, 0.04], [0, 7]])
        np.testing.assert_array_equal(ds.y, [1, 2, 1])
        assert ds.classes == ("a", "b")

    def test_one_hot(self, tmp_path):
        p = write(tmp_path / "a.csv", "c,label\na,1\nb,2\na,1\n")
        ds = load_csv(p, "label")
        np.testing.assert_array_equal(ds.X, [[1, 0], [0, 1], [1, 0]])
        assert ds.feature_names == ("c=a", "c=b")
        np.testing.assert_array_equal(ds.continuous, [False, False])

    def test_mean_imputation(self, tmp_path):
        p = write(tmp_path / "a.csv", "v,label\n1.0,1\n,2\n3.0,1\n")
        np.testing.assert_array_equal(load_csv(p, "label").X[:, 0], [1, 2, 3])

    def test_na_token_and_mode_imputation(self, tmp_path):
        p = write(tmp_path / "a.csv", "c,v,label\nb,NA,1\nNA,4,2\nb,2,1\na,0,2\n")
        ds = load_csv(p, "label")
        np.testing.assert_array_equal(ds.X, [[0, 1, 2], [0, 1, 4], [0, 1, 2], [1, 0, 0]])

    def test_schema_forces_categorical(self, tmp_path):
        p = write(tmp_path / "a.csv", "grade,label\n1,x\n2,y\n1,x\n")
        ds = load_csv(p, "label", {"grade": "categorical"})
        np.testing.assert_array_equal(ds.X, [[1, 0], [0, 1], [1, 0]])

    def test_numeric_labels_sorted_numerically(self, tmp_path):
        p = write(tmp_path / "a.csv", "v,label\n1,10\n2,9\n3,100\n")
        ds = load_csv(p, "label")
        assert ds.classes == ("9", "10", "100")
        np.testing.assert_array_equal(ds.y, [2, 1, 3])

    def test_unparseable_numeric_names_cell(self, tmp_path):
        p = write(tmp_path / "a.csv", "v,label\n1,a\nzz,b\n")
        with pytest.raises(ValueError, match="line 3, column 'v'"):
            load_csv(p, "label", {"v": "numeric"})

    def test_empty_file(self, tmp_path):
        with pytest.raises(ValueError, match="empty"):
            load_csv(write(tmp_path / "a.csv", ""), "label")

    def test_missing_label_column(self, tmp_path):
        with pytest.raises(SchemaError):
            load_csv(write(tmp_path / "a.csv", "v\n1\n"), "label")

    def test_too_many_classes(self, tmp_path):
        rows = "".join(f"{i},{i}\n" for i in range(51))
        with pytest.raises(ValueError, match="51 distinct"):
            load_csv(write(tmp_path / "a.csv", "v,label\n" + rows), "label")

    def test_encoder_replay_and_schema_mismatch(self, tmp_path):
        p = write(tmp_path / "a.csv", "c,v,label\na,1,x\nb,2,y\n")
        enc = load_csv(p, "label").encoder
        enc = TableEncoder.from_dict(enc.to_dict())
        X, y = enc.transform(["v", "c"], [["5", "b"], ["", "zz"]], require_label=False)
        np.testing.assert_array_equal(X, [[0, 1, 5], [0, 0, 1.5]])
        assert y is None
        with pytest.raises(SchemaError, match="'c'"):
            enc.transform(["v"], [["1"]], require_label=False)


class TestStandardize:
    def make(self, X):
        X = np.asarray(X, dtype=float)
        return Dataset(X, np.ones(len(X), dtype=int), K=2)

    def test_example(self):
        st = standardize(self.make([[1.0], [2.0], [3.0]]))
        np.testing.assert_allclose(st.train.X[:, 0], [-1.2247, 0, 1.2247], atol=1e-4)
        np.testing.assert_allclose(st.train.X[:, 0], np.array([-1, 0, 1]) / np.sqrt(2 / 3))

    def test_idempotent(self, rng):
        st = standardize(self.make(rng.normal(3, 2, size=(40, 3))))
        np.testing.assert_allclose(standardize(st.train).train.X, st.train.X, atol=1e-12)

    def test_constant_column_flagged(self):
        st = standardize(self.make([[5.0, 1.0], [5.0, 2.0]]))
        np.testing.assert_array_equal(st.train.X[:, 0], [5.0, 5.0])
        np.testing.assert_array_equal(st.constant, [True, False])

    def test_train_statistics_applied_to_others(self, rng):
        tr = self.make(rng.normal(size=(30, 2)))
        te = self.make(rng.normal(5, 3, size=(10, 2)))
        st = standardize(tr, [te])
        np.testing.assert_allclose(st.others[0].X, (te.X - tr.X.mean(0)) / tr.X.std(0))

    def test_indicator_columns_untouched(self, tmp_path):
        p = write(tmp_path / "a.csv", "c,v,label\na,1,x\nb,2,y\na,6,x\n")
        st = standardize(load_csv(p, "label"))
        np.testing.assert_array_equal(st.train.X[:, :2], [[1, 0], [0, 1], [1, 0]])
        assert abs(st.train.X[:, 2].mean()) < 1e-12


class TestSplits:
    def test_stratified_keeps_proportions(self, rng):
        y = np.repeat([1, 2, 3], [100, 200, 700])
        tr, te = stratified_split(y, 0.1, rng)
        np.testing.assert_array_equal(np.bincount(y[tr])[1:], [10, 20, 70])
        assert len(np.intersect1d(tr, te)) == 0 and len(tr) + len(te) == len(y)

    def test_every_class_in_training(self, rng):
        y = np.array([1] * 50 + [2])
        tr, _ = stratified_split(y, 0.04, rng)
        assert set(y[tr]) == {1, 2}

    def test_random_split(self, rng):
        tr, te = random_split(100, 0.25, rng)
        assert len(tr) == 25 and len(np.union1d(tr, te)) == 100

    def test_fraction_validated(self, rng):
        with pytest.raises(ValueError):
            random_split(10, 1.0, rng)
