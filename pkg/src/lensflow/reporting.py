"""Report-time series CSV output.

Floats are rendered with repr() (shortest round-trip form), so two runs
that produce bitwise-identical states emit byte-identical files. The
column set is append-only; downstream consumers may rely on it.
"""

CSV_HEADER = ("time_s,total_kg,pool_kg,ganglia_kg,injected_kg,"
              "front_depth_m,lateral_extent_m,max_sn,mass_error_rel")


def timeseries_row(row):
    """The 9 column values for one report sample, as floats."""
    part, plume = row.partition, row.plume
    return (
        part.time,
        part.total_net,
        part.pool,
        part.ganglia,
        part.injected,
        plume.front_depth,
        max(plume.lateral_extent, default=0.0),
        plume.max_sn,
        row.error,
    )


def format_timeseries(series):
    lines = [CSV_HEADER]
    for row in series:
        lines.append(",".join(repr(float(v)) for v in timeseries_row(row)))
    return "\n".join(lines) + "\n"


def write_timeseries(series, path):
    """One CSV row per report time."""
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(format_timeseries(series))
