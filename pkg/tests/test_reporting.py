"""CSV schema and byte-exact formatting."""

from lensflow.analysis import MassPartition, PlumeMetrics
from lensflow.reporting import (CSV_HEADER, format_timeseries,
                                timeseries_row, write_timeseries)
from lensflow.simulation import ReportRow


def sample_row(t):
    part = MassPartition(time=t, pool=0.25, ganglia=1.5,
                         background_net=-0.125, injected=2.0,
                         total_net=0.25 + 1.5 + -0.125)
    plume = PlumeMetrics(front_depth=3.75, lateral_extent=(1.5, 0.5),
                         max_sn=0.4125, max_location=(1.0, 2.0),
                         components=2)
    return ReportRow(partition=part, plume=plume, outflow=0.0,
                     clamp=0.0, error=1.25e-4)


def test_header_is_stable():
    assert CSV_HEADER == ("time_s,total_kg,pool_kg,ganglia_kg,injected_kg,"
                          "front_depth_m,lateral_extent_m,max_sn,"
                          "mass_error_rel")


def test_row_values_and_lateral_max():
    row = sample_row(3600.0)
    vals = timeseries_row(row)
    assert vals == (3600.0, 1.625, 0.25, 1.5, 2.0, 3.75, 1.5, 0.4125,
                    1.25e-4)


def test_format_exact_bytes(tmp_path):
    rows = [sample_row(0.0), sample_row(1800.0)]
    text = format_timeseries(rows)
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    assert lines[1] == ("0.0,1.625,0.25,1.5,2.0,3.75,1.5,0.4125,0.000125")
    assert text.endswith("\n")
    assert len(lines) == 3 and all(l.count(",") == 8 for l in lines)

    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_timeseries(rows, a)
    write_timeseries(rows, b)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes().decode() == text
