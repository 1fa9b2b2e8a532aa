import mpmath
import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.stats import kstest

from rmelsteg.errors import SingleClass, TooFewSamples, ValidationError
from rmelsteg.ml import (
    Dataset,
    GaConfig,
    Kernel,
    SvmModel,
    anova_f,
    apply_norm,
    f_sf,
    fit_norm,
    ga_select,
    kfold_cv,
    stratified_folds,
    svm_predict,
    svm_train,
)
from rmelsteg.ml.svm import decision_function


# --- normalisation -----------------------------------------------------------

def test_norm_example():
    st = fit_norm(np.array([[1.0], [2.0], [3.0]]))
    z = apply_norm(np.array([[1.0], [2.0], [3.0]]), st)
    assert z[:, 0] == pytest.approx([-1.2247449, 0.0, 1.2247449], abs=1e-7)


def test_norm_constant_column_maps_to_zero():
    X = np.array([[5.0, 1.0], [5.0, 2.0]])
    st = fit_norm(X)
    assert np.all(apply_norm(np.array([[9.0, 1.5]]), st)[:, 0] == 0)


def test_norm_uses_training_rows_only(rng):
    train = rng.normal(size=(50, 3))
    test = rng.normal(loc=100, size=(5, 3))
    st = fit_norm(train)
    assert np.allclose(st.m, train.mean(0)) and np.allclose(st.sd, train.std(0))
    assert np.all(apply_norm(test, st) > 20)


# --- SVM ---------------------------------------------------------------------

def dual_oracle(K, y, C):
    """Solve the SVM dual with a general-purpose QP routine."""
    Q = (y[:, None] * y[None, :]) * K
    n = y.size
    res = minimize(lambda a: 0.5 * a @ Q @ a - a.sum(), np.full(n, 0.1),
                   jac=lambda a: Q @ a - 1.0, bounds=[(0, C)] * n,
                   constraints=[{"type": "eq", "fun": lambda a: a @ y, "jac": lambda a: y.astype(float)}],
                   method="SLSQP", options={"ftol": 1e-14, "maxiter": 1000})
    a = res.x
    free = (a > 1e-6) & (a < C - 1e-6)
    g = y - Q @ a * y  # y_i - sum_j a_j y_j K_ij
    b = np.mean(g[free])
    return a, b, 0.5 * a @ Q @ a - a.sum()


def test_xor_rbf_matches_qp_oracle():
    X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    y = np.array([0, 0, 1, 1])
    kern = Kernel("rbf", 1.0)
    model = svm_train(X, y, kern, C=10, normalize=False)
    ys = np.where(y == 1, 1.0, -1.0)
    a, b, obj = dual_oracle(kern(X, X), ys, 10)
    probe = np.random.default_rng(0).uniform(-0.5, 1.5, size=(50, 2))
    ref = kern(probe, X) @ (a * ys) + b
    got = decision_function(model, probe)
    assert np.max(np.abs(got - ref)) < 1e-3 * max(1.0, np.max(np.abs(ref)))
    labels, _ = svm_predict(model, X)
    assert labels.tolist() == y.tolist()


def test_random_problem_matches_qp_oracle(rng):
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] + 0.5 * rng.normal(size=40) > 0).astype(int)
    model = svm_train(X, y, Kernel("rbf", 0.5), C=2.0, normalize=False)
    ys = np.where(y == 1, 1.0, -1.0)
    kern = Kernel("rbf", 0.5)
    a, b, obj = dual_oracle(kern(X, X), ys, 2.0)
    full = np.zeros(40)
    sv_rows = [int(np.flatnonzero(np.all(X == s, axis=1))[0]) for s in model.support_vectors]
    full[sv_rows] = model.alphas
    Q = (ys[:, None] * ys[None, :]) * kern(X, X)
    mine = 0.5 * full @ Q @ full - full.sum()
    assert mine == pytest.approx(obj, abs=1e-3 * abs(obj))


def test_separable_linear_margins(rng):
    X = np.vstack([rng.normal(-3, 0.5, size=(30, 2)), rng.normal(3, 0.5, size=(30, 2))])
    y = np.repeat([0, 1], 30)
    model = svm_train(X, y, "linear", C=10, normalize=False)
    labels, margin = svm_predict(model, X)
    assert np.array_equal(labels, y)
    assert np.all(np.where(y == 1, 1, -1) * margin >= 1 - 1e-3)
    # unbounded support vectors sit on the margin
    free = model.alphas < model.C - 1e-8
    assert free.any()
    m = decision_function(model, model.support_vectors[free])
    assert np.all(np.abs(np.abs(m) - 1) < 1e-2)


def test_label_sign_invariance(rng):
    X = rng.normal(size=(60, 4))
    y = (X[:, 1] > 0).astype(int)
    m1 = svm_train(X, y)
    m2 = svm_train(X, 1 - y)
    assert np.allclose(decision_function(m1, X), -decision_function(m2, X), atol=1e-3)


def test_tie_resolves_to_cover():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    model = svm_train(X, [0, 0, 1, 1], "linear", C=10, normalize=False)
    zero = SvmModel(model.kernel, model.C, model.support_vectors[:0], model.alphas[:0],
                    model.sv_labels[:0], 0.0)
    labels, margin = svm_predict(zero, X)
    assert np.all(margin == 0) and np.all(labels == 0)


def test_svm_errors():
    with pytest.raises(SingleClass):
        svm_train(np.zeros((4, 2)), [1, 1, 1, 1])
    with pytest.raises(ValidationError):
        svm_train(np.array([[np.nan, 1.0], [0.0, 1.0]]), [0, 1])
    with pytest.raises(ValidationError):
        Kernel("poly")


def test_model_json_roundtrip(rng):
    X = rng.normal(size=(30, 5))
    y = (X[:, 0] > 0).astype(int)
    model = svm_train(X, y, feature_mask=[True, False, True, True, False])
    back = SvmModel.from_json(model.to_json())
    assert np.allclose(decision_function(back, X), decision_function(model, X), rtol=0, atol=1e-12)
    assert back.n_features == 5


# --- cross validation -------------------------------------------------------

def test_fold_sizes_and_reproducibility():
    y = np.array([0] * 23 + [1] * 17)
    f = stratified_folds(y, 10, seed=4)
    for c in (0, 1):
        sizes = np.bincount(f[y == c], minlength=10)
        assert sizes.max() - sizes.min() <= 1
    assert np.array_equal(f, stratified_folds(y, 10, seed=4))
    assert not np.array_equal(f, stratified_folds(y, 10, seed=5))
    with pytest.raises(TooFewSamples):
        stratified_folds(np.array([0] * 9 + [1] * 20), 10)


def test_grouped_folds_keep_twins_together():
    ids = [f"c{i}" for i in range(20)] + [f"c{i}@a" for i in range(20)] + [f"c{i}@b" for i in range(20)]
    y = np.array([0] * 20 + [1] * 40)
    ds = Dataset(np.zeros((60, 1)), y, ids)
    f = stratified_folds(y, 5, seed=1, groups=ds.groups())
    for i in range(20):
        assert f[i] == f[20 + i] == f[40 + i]
    assert np.bincount(f).tolist() == [12] * 5


def test_cv_separable_duplicated_data():
    X = np.vstack([np.full((20, 2), -1.0), np.full((20, 2), 1.0)])
    ds = Dataset(X, np.repeat([0, 1], 20))
    rep = kfold_cv(ds, k=10, seed=0)
    assert rep.se == 1.0 and rep.sp == 1.0
    assert len(rep.folds) == 10 and sum(f["n_test"] for f in rep.folds) == 40


def test_cv_random_labels_near_chance():
    r = np.random.default_rng(7)
    ds = Dataset(r.normal(size=(400, 5)), r.permutation(np.repeat([0, 1], 200)))
    rep = kfold_cv(ds, k=10, seed=0)
    assert abs(rep.pooled["accuracy"] - 0.5) <= 0.08


def test_cv_report_serialisation(rng):
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] > 0).astype(int)
    rep = kfold_cv(Dataset(X, y), k=4, seed=2)
    assert kfold_cv(Dataset(X, y), k=4, seed=2).to_json() == rep.to_json()
    lines = rep.to_csv().splitlines()
    assert lines[0].startswith("fold,se,sp") and lines[-1].startswith("pooled")
    assert "Se." in rep.table_row()


# --- GA ---------------------------------------------------------------------

def planted_dataset(seed=0, n=80, d=8, informative=2):
    r = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = r.normal(size=(n, d))
    X[:, informative] += 3.0 * y
    return Dataset(X, y)


def test_ga_finds_planted_feature():
    ds = planted_dataset()
    res = ga_select(ds, GaConfig(population=12, generations=4, seed=1))
    assert res.mask[2]
    assert res.fitness >= 0.9
    assert all(b >= a for a, b in zip(res.trace, res.trace[1:]))
    assert len(res.trace) == 5


def test_ga_zero_generations_and_validation():
    ds = planted_dataset()
    res = ga_select(ds, GaConfig(population=4, generations=0, seed=2))
    assert len(res.trace) == 1 and res.mask.shape == (8,)
    with pytest.raises(ValidationError):
        GaConfig(population=5)
    with pytest.raises(ValidationError):
        GaConfig(mutation_rate=1.5)


def test_ga_deterministic():
    ds = planted_dataset(seed=3)
    cfg = GaConfig(population=6, generations=2, seed=9)
    a, b = ga_select(ds, cfg), ga_select(ds, cfg)
    assert np.array_equal(a.mask, b.mask) and a.trace == b.trace


# --- ANOVA ------------------------------------------------------------------

def test_anova_examples():
    assert anova_f([1, 2, 3], [1, 2, 3]) == (0.0, 1.0)
    F, p = anova_f([1, 2, 3], [2, 3, 4])
    assert F == pytest.approx(1.5, rel=1e-12)
    assert anova_f([1, 1, 1], [2, 2, 2]) == (np.inf, 0.0)
    assert anova_f([4, 4], [4, 4]) == (0.0, 1.0)


def test_anova_symmetry_and_shift(rng):
    a, b = rng.normal(size=12), rng.normal(0.5, size=15)
    assert anova_f(a, b) == pytest.approx(anova_f(b, a), rel=1e-12)
    assert anova_f(a + 1e3, b + 1e3)[0] == pytest.approx(anova_f(a, b)[0], rel=1e-8)


def test_anova_columnwise(rng):
    a, b = rng.normal(size=(10, 3)), rng.normal(size=(14, 3))
    F, p = anova_f(a, b)
    for j in range(3):
        assert (F[j], p[j]) == pytest.approx(anova_f(a[:, j], b[:, j]), rel=1e-12)


@pytest.mark.parametrize("F,df2", [(0.3, 5), (1.5, 4), (4.2, 18), (12.0, 98), (60.0, 7)])
def test_p_value_against_mpmath(F, df2):
    with mpmath.workdps(40):
        x = mpmath.mpf(df2) / (df2 + F)
        ref = mpmath.betainc(mpmath.mpf(df2) / 2, mpmath.mpf(1) / 2, 0, x, regularized=True)
    assert float(f_sf(F, 1, df2)) == pytest.approx(float(ref), rel=1e-8, abs=1e-300)


def test_null_p_values_are_uniform():
    r = np.random.default_rng(11)
    a = r.normal(size=(10, 10_000))
    b = r.normal(size=(12, 10_000))
    _, p = anova_f(a, b)
    assert kstest(p, "uniform").statistic < 0.02
