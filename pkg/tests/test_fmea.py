import shutil
from pathlib import Path

import pytest

from klafate.errors import (
    ExclusivityError,
    LinkError,
    NotFoundError,
    WorkbookError,
)
from klafate.fmea import (
    Workbook,
    causes_and_recommendations,
    load_workbook,
    save_workbook,
)
from klafate.ruledsl import Snapshot, eval_bool


def _read_tree(path: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(path.glob("*.csv"))}


class TestLoadFixture:
    def test_counts_and_links(self, bgs_workbook):
        assert [fm.fm_id for fm in bgs_workbook.system_fms] == ["LQ", "LP", "NP"]
        assert [c.fm_id for c in bgs_workbook.component_fms] == [
            "no_vacuum_pump",
            "air_pressure_low",
            "silo_low",
        ]
        assert len(bgs_workbook.profiles) == 3
        assert bgs_workbook.approximation_exponent == 2
        lq_components = bgs_workbook.components_of("LQ")
        assert {c.fm_id for c in lq_components} == {"no_vacuum_pump", "air_pressure_low"}

    def test_threshold_entry(self, bgs_workbook):
        assert bgs_workbook.settings.system.value("LOWEST_PRESSURE") == 5.0
        assert bgs_workbook.settings.system.unit("LOWEST_PRESSURE") == "bar"
        assert bgs_workbook.settings.team.value("KPI_LOW") == 0.5

    def test_variables_collected(self, bgs_workbook):
        assert {
            "actual_pressure",
            "suction_time",
            "production_rate",
            "loading_motor_on",
            "loading_vacuum_time",
            "loading_discharge_flap_open_time",
            "loading_overflow_value",
            "silo_level",
        } == set(bgs_workbook.variables)

    def test_rules_evaluate(self, bgs_workbook):
        thresholds = bgs_workbook.settings.combined()
        lq = bgs_workbook.system_fm("LQ")
        low_pressure = Snapshot(
            {"actual_pressure": 4.0, "suction_time": 3.5, "production_rate": 3.4}
        )
        nominal = Snapshot(
            {"actual_pressure": 6.5, "suction_time": 3.5, "production_rate": 3.4}
        )
        assert eval_bool(lq.rule, low_pressure, thresholds)
        assert not eval_bool(lq.rule, nominal, thresholds)

    def test_loading_is_idempotent(self, bgs_workbook_path):
        first = load_workbook(bgs_workbook_path)
        second = load_workbook(bgs_workbook_path)
        assert first == second


class TestLoadErrors:
    def test_unknown_system_link(self, broken_workbook_path):
        with pytest.raises(LinkError) as err:
            load_workbook(broken_workbook_path)
        assert err.value.row == 2
        assert "QX" in str(err.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(WorkbookError):
            load_workbook(tmp_path)

    def test_duplicate_system_fm(self, bgs_workbook_path, tmp_path):
        target = tmp_path / "dup.fmea"
        shutil.copytree(bgs_workbook_path, target)
        system = target / "system.csv"
        lines = system.read_text().splitlines()
        lines.append(lines[1])
        system.write_text("\n".join(lines) + "\n")
        with pytest.raises(WorkbookError) as err:
            load_workbook(target)
        assert "exactly one rule" in str(err.value)

    def test_overlapping_rules_rejected_with_witness(self, bgs_workbook_path, tmp_path):
        target = tmp_path / "overlap.fmea"
        shutil.copytree(bgs_workbook_path, target)
        system = target / "system.csv"
        lines = system.read_text().splitlines()
        # LP without the quality guard overlaps LQ
        lines[2] = (
            "bulk_good_production,throughput_monitoring,LP,low_production,"
            "Production rate too low,C3,"
            "C3 := production_rate < LOWEST_PRODUCTION_RATE"
        )
        system.write_text("\n".join(lines) + "\n")
        with pytest.raises(ExclusivityError) as err:
            load_workbook(target)
        assert set(err.value.labels) == {"LQ", "LP"}
        assert err.value.witness

    def test_team_threshold_out_of_scope_in_system_rule(self, bgs_workbook_path, tmp_path):
        target = tmp_path / "scope.fmea"
        shutil.copytree(bgs_workbook_path, target)
        system = target / "system.csv"
        text = system.read_text().replace(
            "C1 := actual_pressure < LOWEST_PRESSURE",
            "C1 := actual_pressure < KPI_HIGH",
            1,
        )
        system.write_text(text)
        with pytest.raises(WorkbookError) as err:
            load_workbook(target)
        assert "out of scope" in str(err.value)

    def test_bad_header(self, bgs_workbook_path, tmp_path):
        target = tmp_path / "hdr.fmea"
        shutil.copytree(bgs_workbook_path, target)
        profiles = target / "profiles.csv"
        profiles.write_text("who,e_g,e_m,waste,production\n")
        with pytest.raises(WorkbookError) as err:
            load_workbook(target)
        assert err.value.row == 1

    def test_broken_rule_reports_row(self, bgs_workbook_path, tmp_path):
        target = tmp_path / "syntax.fmea"
        shutil.copytree(bgs_workbook_path, target)
        component = target / "component.csv"
        text = component.read_text().replace(",C1 and C2,", ",C1 and and C2,")
        component.write_text(text)
        with pytest.raises(WorkbookError) as err:
            load_workbook(target)
        assert err.value.file == "component.csv"
        assert err.value.row == 3


class TestCausesAndRecommendations:
    def test_single_active_component(self, bgs_workbook):
        pairs = causes_and_recommendations(bgs_workbook, "LQ", ["no_vacuum_pump"])
        assert pairs == [
            (
                "Vacuum pump is not running or has lost suction",
                "Check the vacuum pump supply and restart the loading station",
            )
        ]

    def test_no_active_components(self, bgs_workbook):
        assert causes_and_recommendations(bgs_workbook, "LQ", []) == []

    def test_two_active_components_keep_row_order(self, bgs_workbook):
        pairs = causes_and_recommendations(
            bgs_workbook, "LQ", ["air_pressure_low", "no_vacuum_pump"]
        )
        assert [p[0] for p in pairs] == [
            "Vacuum pump is not running or has lost suction",
            "Compressed air valve closed or supply pressure too low",
        ]

    def test_component_of_other_system_is_filtered(self, bgs_workbook):
        assert causes_and_recommendations(bgs_workbook, "LQ", ["silo_low"]) == []

    def test_unknown_identifiers(self, bgs_workbook):
        with pytest.raises(NotFoundError):
            causes_and_recommendations(bgs_workbook, "XX", [])
        with pytest.raises(NotFoundError):
            causes_and_recommendations(bgs_workbook, "LQ", ["nope"])


class TestSaveRoundTrip:
    def test_save_load_save_is_byte_identical(self, bgs_workbook, tmp_path):
        first_dir = tmp_path / "first"
        second_dir = tmp_path / "second"
        save_workbook(bgs_workbook, first_dir)
        reloaded = load_workbook(first_dir)
        save_workbook(reloaded, second_dir)
        assert _read_tree(first_dir) == _read_tree(second_dir)
        assert reloaded == load_workbook(second_dir)

    def test_saved_workbook_equals_original(self, bgs_workbook, tmp_path):
        save_workbook(bgs_workbook, tmp_path / "copy")
        assert load_workbook(tmp_path / "copy") == bgs_workbook
