import json

import numpy as np
import pytest

from relcompress.errors import NonMonotoneTimestampError, SeriesFormatError
from relcompress.models import IntervalKind
from relcompress.utils.series_io import (
    JsonLinesWriter,
    format_float,
    iter_records,
    read_labels,
    read_series,
    write_reconstruction_csv,
    write_segmentation_csv,
    write_table,
)


def write_text(tmp_path, text, name="series.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_read_series_skips_blank_and_comment_lines(tmp_path):
    path = write_text(tmp_path, "# sensor 4\n1,0\n\n2, 3\n3,0,extra\n  4 , 1 \n")
    series = read_series(path)
    np.testing.assert_array_equal(series.timestamps, [1, 2, 3, 4])
    np.testing.assert_array_equal(series.values, [0, 3, 0, 1])


def test_non_numeric_value_reports_line(tmp_path):
    path = write_text(tmp_path, "1,0\n2,abc\n")
    with pytest.raises(SeriesFormatError, match="line 2: value 'abc' is not a number"):
        read_series(path)


def test_missing_column_reports_line(tmp_path):
    path = write_text(tmp_path, "# header\n1\n")
    with pytest.raises(SeriesFormatError) as info:
        read_series(path)
    assert info.value.line_number == 2


def test_non_finite_values_are_rejected():
    with pytest.raises(SeriesFormatError, match="not finite"):
        list(iter_records(["1,nan"]))


def test_repeated_timestamp_reports_line(tmp_path):
    path = write_text(tmp_path, "1,0\n2,1\n2,5\n")
    with pytest.raises(NonMonotoneTimestampError) as info:
        read_series(path)
    assert info.value.line_number == 3
    assert info.value.previous == 2 and info.value.current == 2


def test_empty_file_is_rejected(tmp_path):
    with pytest.raises(SeriesFormatError, match="no data lines"):
        read_series(write_text(tmp_path, "# nothing\n"))


def test_missing_file_is_reported(tmp_path):
    with pytest.raises(SeriesFormatError, match="cannot open"):
        read_series(tmp_path / "absent.csv")


def test_records_carry_line_numbers():
    records = list(iter_records(["# c", "1,2", "", "3,4"]))
    assert records == [(2, 1.0, 2.0), (4, 3.0, 4.0)]


def test_read_labels(tmp_path):
    path = write_text(tmp_path, "# start,end,kind,name\n0,2,Event,first\n3,5,nonevent\n",
                      name="labels.csv")
    first, second = read_labels(path)
    assert (first.start, first.end, first.kind, first.name) == (0, 2, IntervalKind.EVENT, "first")
    assert second.kind is IntervalKind.NON_EVENT
    assert second.name == "nonevent@3"


@pytest.mark.parametrize("text", ["0,2\n", "0,2,Spike\n", "3,1,Event\n"])
def test_bad_labels_report_line(tmp_path, text):
    path = write_text(tmp_path, text, name="labels.csv")
    with pytest.raises(SeriesFormatError, match="line 1"):
        read_labels(path)


def test_segmentation_csv_layout(tmp_path):
    path = write_segmentation_csv(tmp_path / "out" / "seg.csv", [15 / 7, 23 / 7], [1, 3], [3, 4])
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# j,point,lower,upper"
    assert lines[1] == f"1,{format_float(15 / 7)},1,3"
    assert lines[2].startswith("2,3.28571428571,")


def test_reconstruction_csv_reads_back_as_series(tmp_path, worked_series):
    path = write_reconstruction_csv(tmp_path / "recon.csv", worked_series, [0.0, 3.0, 2.0, 1.0])
    series = read_series(path)
    np.testing.assert_array_equal(series.timestamps, worked_series.timestamps)
    np.testing.assert_array_equal(series.values, worked_series.values)
    assert path.read_text(encoding="utf-8").splitlines()[3] == "3,0,2"


def test_write_table_formats_floats(tmp_path):
    path = write_table(tmp_path / "t.csv", ["n", "err"], [[10, 1 / 3]])
    assert path.read_text(encoding="utf-8").splitlines() == ["n,err", "10,0.333333333333"]


def test_json_lines_writer(tmp_path):
    with JsonLinesWriter(tmp_path / "c.jsonl") as writer:
        writer.write({"n": 1, "points": [1.5]})
        writer.write({"n": 2, "points": [2.5]})
    assert writer.count == 2
    lines = (tmp_path / "c.jsonl").read_text(encoding="utf-8").splitlines()
    assert [json.loads(line)["n"] for line in lines] == [1, 2]
