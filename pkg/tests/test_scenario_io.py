import pytest

from fcboost import scenario_io
from fcboost.sim import scenario1, scenario2, scenario3


class TestRoundTrip:
    @pytest.mark.parametrize("factory", [scenario1, scenario2, scenario3])
    def test_presets_round_trip(self, factory):
        sc = factory()
        text = scenario_io.dumps(sc)
        back = scenario_io.loads(text)
        assert back.mode == sc.mode
        assert back.policy == sc.policy
        assert back.duration == sc.duration
        assert back.x0 == sc.x0
        assert back.xc0 == sc.xc0
        assert back.setpoints == sc.setpoints
        assert back.loads == sc.loads
        assert back.gains == sc.gains
        assert back.sat == sc.sat
        assert back.params.theta == sc.params.theta
        assert back.params.pol == sc.params.pol
        assert back.params.C_fc == sc.params.C_fc
        assert back.params.L == sc.params.L
        assert back.params.C == sc.params.C
        assert back.est_gains == sc.est_gains
        assert back.theta_hat0 == sc.theta_hat0
        assert back.step == sc.step
        assert back.name == sc.name

    def test_second_round_trip_is_stable(self):
        text = scenario_io.dumps(scenario3())
        assert scenario_io.dumps(scenario_io.loads(text)) == text

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "scenario.txt"
        scenario_io.dump(scenario1(), path)
        back = scenario_io.load(path)
        assert back.setpoints == [(0.0, 40.0), (0.25, 50.0)]


class TestParseErrors:
    def base_text(self):
        return scenario_io.dumps(scenario1())

    def test_unknown_key(self):
        text = self.base_text().replace("k_p = 1.0", "k_p = 1.0\nbogus = 3")
        with pytest.raises(ValueError, match="bogus"):
            scenario_io.loads(text)

    def test_missing_section(self):
        text = self.base_text().replace("[plant]", "[plantx]")
        with pytest.raises(ValueError, match=r"\[plant\]|plant"):
            scenario_io.loads(text)

    def test_bad_schedule_entry(self):
        text = self.base_text().replace("setpoint = 0.0:40.0, 0.25:50.0", "setpoint = 0.0=40.0")
        with pytest.raises(ValueError, match="schedule"):
            scenario_io.loads(text)

    def test_estimator_section_rejected_in_known_mode(self):
        text = self.base_text() + "\n[estimator]\nk1 = 1.0\nk2 = 1.0\n"
        with pytest.raises(ValueError, match="estimator"):
            scenario_io.loads(text)

    def test_adaptive_requires_estimator_section(self):
        text = scenario_io.dumps(scenario3())
        text = text[: text.index("[estimator]")] + text[text.index("[schedule]") :]
        with pytest.raises(ValueError, match="estimator"):
            scenario_io.loads(text)

    def test_bad_mode(self):
        text = self.base_text().replace("mode = known", "mode = magic")
        with pytest.raises(ValueError, match="magic"):
            scenario_io.loads(text)

    def test_invalid_parameter_value(self):
        text = self.base_text().replace("r_l = 4.608", "r_l = -1.0")
        with pytest.raises(ValueError):
            scenario_io.loads(text)

    def test_malformed_text(self):
        with pytest.raises(ValueError, match="malformed|missing"):
            scenario_io.loads("not a scenario file")
