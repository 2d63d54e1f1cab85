import numpy as np
import pytest

from conftest import random_contact_positions
from touchrecon.gp import (
    ContactDataset,
    ContactPoint,
    GpModel,
    NumericalError,
    SphericalPrior,
    TpsKernel,
    model_from_contacts,
)


def _scalar_mean(m_p, k0, noise):
    # 1x1 instantiation of the posterior mean with Y = 0.
    return m_p + k0 / (k0 + noise) * (0.0 - m_p)


def _scalar_var(k0, noise):
    # 1x1 instantiation of the posterior variance.
    return k0 - k0**2 / (k0 + noise)


class TestKernel:
    def test_zero_distance(self):
        k = TpsKernel(scale=2.0)
        assert k((0.0, 0.0, 0.0), (0.0, 0.0, 0.0)) == pytest.approx(8.0, abs=0.0)

    def test_zero_at_scale(self):
        k = TpsKernel(scale=0.7)
        assert k.at_distance(0.7) == pytest.approx(0.0, abs=1e-15)

    def test_hand_value(self):
        # 2*1 - 3*2*1 + 8 at distance 1 with scale 2.
        k = TpsKernel(scale=2.0)
        assert k((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)) == pytest.approx(4.0, abs=0.0)

    def test_symmetry_exact(self, kernel, rng):
        a = rng.uniform(-0.2, 0.2, size=(200, 3))
        b = rng.uniform(-0.2, 0.2, size=(200, 3))
        for i in range(len(a)):
            assert kernel(a[i], b[i]) == kernel(b[i], a[i])

    def test_strictly_decreasing_within_scale(self, kernel):
        d = np.linspace(0.0, kernel.scale, 500)
        vals = kernel.at_distance(d)
        assert np.all(np.diff(vals) < 0.0)
        assert np.all(vals >= -1e-12)


class TestPrior:
    def test_center_and_surface(self):
        p = SphericalPrior(center=(0.0, 0.0, 0.0), radius=0.05)
        assert p.mean(np.zeros(3)) == pytest.approx(-0.05, abs=0.0)
        assert p.mean(np.array([0.05, 0.0, 0.0])) == pytest.approx(0.0, abs=0.0)
        assert p.mean(np.array([0.1, 0.0, 0.0])) == pytest.approx(0.05, abs=1e-15)


class TestDataset:
    def test_dedup(self):
        ds = ContactDataset()
        assert ds.append(ContactPoint(position=(0.0, 0.0, 0.0)))
        assert not ds.append(ContactPoint(position=(0.0, 0.0, 0.0)))
        assert not ds.append(ContactPoint(position=(0.0005, 0.0, 0.0)))
        assert ds.append(ContactPoint(position=(0.0015, 0.0, 0.0)))
        assert len(ds) == 2

    def test_timestamps_must_not_decrease(self):
        ds = ContactDataset()
        ds.append(ContactPoint(position=(0.0, 0.0, 0.0), t_ms=100.0))
        with pytest.raises(ValueError):
            ds.append(ContactPoint(position=(0.01, 0.0, 0.0), t_ms=50.0))


class TestModel:
    def test_empty_model_returns_prior(self, kernel, prior, rng):
        model = GpModel(kernel, prior)
        q = rng.uniform(-0.2, 0.2, size=(50, 3))
        mu, var = model.predict(q)
        assert np.array_equal(mu, prior.mean(q))
        assert np.all(var == kernel.zero_distance_value)

    def test_add_and_dedup(self, kernel, prior):
        model = GpModel(kernel, prior)
        p = ContactPoint(position=(0.0, 0.0, 0.1))
        assert model.add_contact(p)
        assert model.n_contacts == 1
        assert not model.add_contact(p)
        assert model.n_contacts == 1

    def test_single_contact_interpolates_with_jitter_only(self, kernel, prior):
        model = GpModel(kernel, prior, noise=0.0)
        p = np.array([0.03, -0.02, 0.09])
        model.add_contact(ContactPoint(position=p))
        assert abs(model.mean(p)[0]) < 1e-9
        assert model.variance(p)[0] < 1e-9

    def test_single_contact_matches_scalar_formulas(self, kernel, prior):
        model = GpModel(kernel, prior)
        p = np.array([0.05, 0.0, 0.08])
        model.add_contact(ContactPoint(position=p))
        k0 = kernel.zero_distance_value
        m_p = float(prior.mean(p))
        assert model.mean(p)[0] == pytest.approx(
            _scalar_mean(m_p, k0, model.effective_noise), abs=1e-12)
        assert model.variance(p)[0] == pytest.approx(
            _scalar_var(k0, model.effective_noise), abs=1e-12)

    def test_interpolation_many_contacts(self, kernel, prior, rng):
        for _ in range(5):
            pts = random_contact_positions(rng, 50)
            model = GpModel(kernel, prior, noise=0.0)
            for p in pts:
                assert model.add_contact(ContactPoint(position=p))
            assert np.max(np.abs(model.mean(pts))) < 1e-6

    def test_incremental_matches_batch_refit(self, kernel, prior, rng):
        pts = random_contact_positions(rng, 50)
        model = GpModel(kernel, prior)
        for p in pts:
            model.add_contact(ContactPoint(position=p))
        refit = model.refit()
        q = rng.uniform(-0.15, 0.15, size=(100, 3)) + prior.center
        mu_inc, var_inc = model.predict(q)
        mu_bat, var_bat = refit.predict(q)
        np.testing.assert_allclose(mu_inc, mu_bat, rtol=1e-8, atol=1e-13)
        np.testing.assert_allclose(var_inc, var_bat, rtol=1e-8, atol=1e-13)

    def test_refit_is_idempotent(self, kernel, prior, rng):
        pts = random_contact_positions(rng, 20)
        model = model_from_contacts([ContactPoint(position=p) for p in pts], kernel, prior)
        once = model.refit()
        twice = once.refit()
        q = rng.uniform(-0.15, 0.15, size=(40, 3)) + prior.center
        mu1, var1 = once.predict(q)
        mu2, var2 = twice.predict(q)
        assert np.array_equal(mu1, mu2)
        assert np.array_equal(var1, var2)

    def test_variance_never_increases_with_data(self, kernel, prior, rng):
        pts = random_contact_positions(rng, 50)
        queries = rng.uniform(-0.12, 0.12, size=(20, 3)) + prior.center
        model = GpModel(kernel, prior)
        prev = model.variance(queries)
        for p in pts:
            model.add_contact(ContactPoint(position=p))
            cur = model.variance(queries)
            assert np.all(cur <= prev + 1e-9)
            prev = cur

    def test_prior_recovery_far_from_data(self, kernel, prior):
        # Single-contact closed form: the pull toward the data decays with
        # k(d); at d >= 0.8 R the bound k(d)/(k0 + noise) * |m(p)| applies.
        model = GpModel(kernel, prior)
        p = np.array([0.0, 0.0, 0.14])
        model.add_contact(ContactPoint(position=p))
        d = 0.85 * kernel.scale
        q = p + np.array([0.0, 0.0, d])
        bound = kernel.at_distance(d) / (kernel.zero_distance_value + model.effective_noise)
        gap = abs(model.mean(q)[0] - prior.mean(q))
        assert gap <= bound * abs(prior.mean(p)) + 1e-12

    def test_permutation_invariance(self, kernel, prior, rng):
        pts = random_contact_positions(rng, 30)
        contacts = [ContactPoint(position=p) for p in pts]
        fwd = model_from_contacts(contacts, kernel, prior).refit()
        rev = model_from_contacts(contacts[::-1], kernel, prior).refit()
        q = rng.uniform(-0.12, 0.12, size=(50, 3)) + prior.center
        mu_f, var_f = fwd.predict(q)
        mu_r, var_r = rev.predict(q)
        np.testing.assert_allclose(mu_f, mu_r, rtol=0.0, atol=1e-10)
        np.testing.assert_allclose(var_f, var_r, rtol=0.0, atol=1e-10)

    def test_streaming_equals_manual_appends(self, kernel, prior, rng):
        pts = random_contact_positions(rng, 10)
        contacts = [ContactPoint(position=p) for p in pts]
        a = model_from_contacts(contacts, kernel, prior)
        b = GpModel(kernel, prior)
        for c in contacts:
            b.add_contact(c)
        q = rng.uniform(-0.1, 0.1, size=(20, 3))
        assert np.array_equal(a.mean(q), b.mean(q))

    def test_rejects_nonfinite_queries(self, kernel, prior):
        model = GpModel(kernel, prior)
        with pytest.raises(ValueError):
            model.mean(np.array([[np.inf, 0.0, 0.0]]))

    def test_breakdown_signals_ill_conditioned_dataset(self, prior, rng):
        # A scale below the point spread puts pairs past the kernel's
        # decreasing branch; the Gram matrix goes indefinite and no amount
        # of permitted jitter can rescue the factorization.
        model = GpModel(TpsKernel(scale=0.01), prior, noise=0.0)
        with pytest.raises(NumericalError):
            for p in rng.uniform(-0.2, 0.2, size=(40, 3)):
                model.add_contact(ContactPoint(position=p))
