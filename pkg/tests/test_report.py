import math

import pytest

from manetsim.report import (CSV_COLUMNS, emit_report, ordering, render_csv, render_series,
                             render_summary)
from manetsim.scenario import RunResult


def fake(protocol, t, seed=1, pdr=0.5, thr=100.0, nrl=1.0):
    return RunResult(protocol=protocol, sim_time=float(t), seed=seed, packets_sent=100,
                     packets_received=int(100 * pdr), paper_pdr=round(100 / pdr, 2) if pdr else math.inf,
                     packets_forwarded=3, pdr=pdr, throughput_Bps=thr, avg_delay_s=0.01, nrl=nrl)


def three_protocols():
    out = []
    for p, pdr, thr, n in (("aodv", 0.9, 300, 0.5), ("dsdv", 0.7, 200, 0.1), ("dsr", 0.8, 250, 2.0)):
        out += [fake(p, t, pdr=pdr, thr=thr, nrl=n) for t in (25, 50)]
    return out


def test_csv_header_is_fixed():
    assert ",".join(CSV_COLUMNS) == ("protocol,sim_time,seed,packets_sent,packets_received,paper_pdr,"
                                     "packets_forwarded,pdr,throughput_Bps,avg_delay_s,nrl")


def test_one_protocol_seven_times():
    rows = [fake("dsr", t) for t in (25, 50, 75, 100, 125, 150, 175)]
    lines = render_csv(rows).splitlines()
    assert len(lines) == 8
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("dsr,25,1,100,50,200.00,3,0.500000,")


def test_seed_mean_rows_and_inf():
    rows = [fake("aodv", 25, seed=1, pdr=0.5), fake("aodv", 25, seed=2, pdr=0.0)]
    lines = render_csv(rows).splitlines()
    assert len(lines) == 4
    assert lines[3].startswith("aodv,25,mean,100.00,25.00,inf,")


def test_summary_has_three_orderings():
    text = render_summary(three_protocols())
    head = text.splitlines()[:3]
    assert head == ["throughput: AODV > DSR > DSDV", "pdr: AODV > DSR > DSDV", "nrl: DSDV < AODV < DSR"]


def test_ordering_ties():
    assert ordering({"aodv": 1.0, "dsr": 1.0, "dsdv": 0.5}, True) == "AODV = DSR > DSDV"


def test_series_rows_match_times():
    text = render_series(three_protocols(), "pdr")
    lines = text.splitlines()
    assert lines[0] == "# sim_time aodv dsdv dsr"
    assert lines[1:] == ["25 0.900000 0.700000 0.800000", "50 0.900000 0.700000 0.800000"]


def test_emit_report_idempotent(tmp_path):
    res = three_protocols()
    paths = emit_report(res, str(tmp_path), figures=True)
    names = sorted(p.rsplit("/", 1)[1] for p in paths)
    assert "results.csv" in names and "summary.txt" in names and "pdr_vs_time.png" in names
    first = {p: open(p, "rb").read() for p in paths}
    emit_report(res, str(tmp_path), figures=True)
    assert {p: open(p, "rb").read() for p in paths} == first


def test_emit_report_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], str(tmp_path))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_report(three_protocols(), str(blocker / "sub"))
