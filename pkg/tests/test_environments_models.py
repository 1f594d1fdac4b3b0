"""
Tests for environment configuration models.
"""
import pytest
from pydantic import TypeAdapter, ValidationError

from uss_sim.models.environments import BscConfig, EnvironmentSpec, TraceDataset, TraceSource


class TestBscConfig:
    def test_defaults(self):
        """Test the default generator profile."""
        cfg = BscConfig()
        assert cfg.gamma_targets == [0.4, 0.1, 0.05]
        assert cfg.label_bias == 0.7
        assert cfg.perturb_prob == 0.1
        assert cfg.K == 3
        assert cfg.column_order() is None

    def test_increasing_targets(self):
        """Test error targets must be nonincreasing."""
        with pytest.raises(ValidationError) as exc:
            BscConfig(gamma_targets=[0.1, 0.2])
        assert "nonincreasing" in str(exc.value)

    def test_target_range(self):
        """Test error targets must lie in [0, 1)."""
        with pytest.raises(ValidationError):
            BscConfig(gamma_targets=[1.0])

    def test_bias_range(self):
        """Test the label bias must be strictly inside (0, 1)."""
        with pytest.raises(ValidationError):
            BscConfig(label_bias=1.0)

    def test_sensor_order(self):
        """Test a permutation maps onto output columns."""
        cfg = BscConfig(sensor_order=[1, 3, 2])
        assert cfg.column_order() == [0, 1, 3, 2]

    def test_sensor_order_not_permutation(self):
        """Test sensor_order must be a permutation of 1..K."""
        with pytest.raises(ValidationError) as exc:
            BscConfig(sensor_order=[1, 1, 2])
        assert "permutation" in str(exc.value)


class TestEnvironmentSpec:
    def test_discriminates_bsc(self):
        """Test the union picks the BSC config by type."""
        spec = TypeAdapter(EnvironmentSpec).validate_python({"type": "bsc", "seed": 4})
        assert isinstance(spec, BscConfig)
        assert spec.seed == 4

    def test_discriminates_trace(self):
        """Test the union picks a trace reference by type."""
        spec = TypeAdapter(EnvironmentSpec).validate_python({"type": "trace", "path": "x.csv"})
        assert isinstance(spec, TraceSource)

    def test_unknown_type(self):
        """Test unknown environment types are rejected."""
        with pytest.raises(ValidationError):
            TypeAdapter(EnvironmentSpec).validate_python({"type": "gaussian"})


class TestTraceDataset:
    def test_row_width(self):
        """Test every row needs K+1 entries."""
        with pytest.raises(ValidationError) as exc:
            TraceDataset(K=2, rows=((1, 1),))
        assert "width" in str(exc.value)

    def test_binary_rows(self):
        """Test entries must be binary."""
        with pytest.raises(ValidationError):
            TraceDataset(K=1, rows=((1, 3),))

    def test_as_array(self):
        """Test the array view keeps row order."""
        ds = TraceDataset(K=1, rows=((1, 0), (0, 0)))
        assert ds.as_array().tolist() == [[1, 0], [0, 0]]
