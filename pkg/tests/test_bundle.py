import json

import numpy as np
import pytest

from rdmlab import bundle as bundle_mod
from rdmlab import functionals
from rdmlab.errors import (
    BundleFormatError,
    DimensionTooLarge,
    NonHermitianInput,
    SpinRequiredForU,
    ValidationError,
)


class TestHubbardBuilder:
    def test_noninteracting_dimer_energy(self):
        b = bundle_mod.build_hubbard(2, spin=True, t=1.0, u=0.0)
        assert functionals.e_rdm(None, b.system()) == pytest.approx(-2.0, abs=1e-12)

    def test_interacting_dimer_energy(self):
        b = bundle_mod.build_hubbard(2, spin=True, t=1.0, u=8.0)
        exact = 4.0 - np.sqrt(20.0)  # dense-diagonalization value, frozen
        assert functionals.e_rdm(None, b.system()) == pytest.approx(exact, abs=1e-12)

    def test_zero_interaction_functional_vanishes(self):
        b = bundle_mod.build_hubbard(2, spin=True, t=1.0, u=0.0)
        sys_spec = b.system()
        gamma = functionals.ground_state_rdm(sys_spec)
        res = functionals.f_rdm_primal(gamma, sys_spec, strict=False)
        assert abs(res.value) < 1e-8

    def test_site_partition_measure(self):
        b = bundle_mod.build_hubbard(3, spin=True, t=1.0, u=2.0)
        pvm = b.pvm()
        assert pvm.n_atoms == 3
        assert list(pvm.ranks) == [2, 2, 2]

    def test_interaction_needs_spin(self):
        with pytest.raises(SpinRequiredForU):
            bundle_mod.build_hubbard(3, spin=False, t=1.0, u=1.0)

    def test_attractive_interaction_rejected(self):
        with pytest.raises(ValidationError):
            bundle_mod.build_hubbard(2, spin=True, t=1.0, u=-1.0)

    def test_orbital_cap(self):
        with pytest.raises(DimensionTooLarge):
            bundle_mod.build_hubbard(8, spin=True)


class TestCoulombBuilder:
    def test_zero_charge_means_zero_potential(self):
        b = bundle_mod.build_coulomb1d(8, z=0.0)
        assert np.max(np.abs(b.v_ext)) == 0.0

    def test_laplacian_is_psd(self):
        b = bundle_mod.build_coulomb1d(16)
        assert np.linalg.eigvalsh(b.t_one)[0] >= -1e-12

    def test_cell_weights_are_spacing(self):
        b = bundle_mod.build_coulomb1d(10, box=5.0)
        assert np.allclose(b.weights, 0.5)

    def test_large_grid_allowed_for_one_body_use(self):
        b = bundle_mod.build_coulomb1d(64)
        assert b.d == 64
        # many-body assembly on such a grid is refused
        with pytest.raises(DimensionTooLarge):
            b.system().t_sector


class TestDocumentFormat:
    def test_roundtrip_is_byte_exact(self, dimer_bundle, tmp_path):
        path = tmp_path / "bundle.json"
        dimer_bundle.save(path)
        text1 = path.read_text()
        again = bundle_mod.OperatorBundle.load(path)
        again.save(path)
        assert path.read_text() == text1

    def test_hash_stability(self, dimer_bundle):
        doc = json.loads(dimer_bundle.canonical_json())
        rebuilt = bundle_mod.OperatorBundle.from_document(doc)
        assert rebuilt.input_hash() == dimer_bundle.input_hash()

    def test_complex_entries_survive(self, tmp_path):
        b = bundle_mod.build_coulomb1d(6)
        b.v_ext = b.v_ext.astype(complex)
        b.v_ext[0, 1] = 0.25j
        b.v_ext[1, 0] = -0.25j
        path = tmp_path / "c.json"
        b.save(path)
        again = bundle_mod.OperatorBundle.load(path)
        assert again.v_ext[0, 1] == 0.25j

    def test_rejects_non_hermitian_kinetic(self, dimer_bundle):
        doc = dimer_bundle.to_document()
        doc["t_one"][0][1] = [5.0, 0.0]
        with pytest.raises(NonHermitianInput):
            bundle_mod.OperatorBundle.from_document(doc)

    def test_rejects_unknown_version(self, dimer_bundle):
        doc = dimer_bundle.to_document()
        doc["format_version"] = 99
        with pytest.raises(BundleFormatError):
            bundle_mod.OperatorBundle.from_document(doc)

    def test_rejects_missing_field(self, dimer_bundle):
        doc = dimer_bundle.to_document()
        del doc["pvm"]
        with pytest.raises(BundleFormatError):
            bundle_mod.OperatorBundle.from_document(doc)

    def test_rejects_bad_pvm_kind(self, dimer_bundle):
        doc = dimer_bundle.to_document()
        doc["pvm"] = {"kind": "mystery"}
        with pytest.raises(BundleFormatError):
            bundle_mod.OperatorBundle.from_document(doc)


class TestRebuild:
    def test_parameter_override(self, dimer_bundle):
        stronger = bundle_mod.rebuild_with(dimer_bundle, u=8.0)
        assert stronger.metadata["params"]["u"] == 8.0
        assert stronger.metadata["params"]["t"] == 1.0

    def test_unknown_parameter_rejected(self, dimer_bundle):
        with pytest.raises(ValidationError):
            bundle_mod.rebuild_with(dimer_bundle, zeta=1.0)

    def test_unknown_model_rejected(self):
        with pytest.raises(ValidationError):
            bundle_mod.build_model("ising", {})
