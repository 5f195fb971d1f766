import numpy as np
import pytest

from glider_figs.cli import main
from glider_figs.render import FIGURE_KINDS, RenderError, SchemaError, render

FLOWS = ("center", "unstable-node", "saddle", "stable-node")
COHORTS = (1, 2, 5, 10)
STRATEGIES = ("optimal", "none", "random")
N_OBS = 10
SEEDS = 2


def _fmt(x):
    return format(float(x), ".17g")


def write_run(run_dir, flow, gliders, strategy, seed):
    run_dir.mkdir(parents=True)
    rng = np.random.default_rng(abs(hash((flow, gliders, strategy, seed))) % 2 ** 32)
    scale = {"optimal": 0.5, "none": 2.0, "random": 1.5}[strategy]
    trace = 6e6 * np.exp(-np.arange(1, N_OBS + 1) * scale)
    rms = 1.0 / np.sqrt(np.arange(1, N_OBS + 1)) * scale
    cols = "obs_index,time,trace,rms," + ",".join(
        f"g{k}_x,g{k}_y" for k in range(1, gliders + 1))
    lines = [cols]
    pos = rng.uniform(-1, 1, (gliders, 2))
    for i in range(N_OBS):
        pos = pos + 0.05
        row = [str(i + 1), _fmt(0.1 * (i + 1)), _fmt(trace[i]), _fmt(rms[i])]
        row += [_fmt(v) for v in pos.reshape(-1)]
        lines.append(",".join(row))
    (run_dir / "metrics.csv").write_text("\n".join(lines) + "\n")

    plines = ["strategy,glider,t,x,y"]
    for k in range(1, gliders + 1):
        p = rng.uniform(-1, 1, 2)
        for i in range(N_OBS + 1):
            p = p + 0.03 * np.array([np.cos(k + i * 0.3), np.sin(k - i * 0.2)])
            plines.append(f"{strategy},{k},{_fmt(0.1 * i)},{_fmt(p[0])},{_fmt(p[1])}")
    (run_dir / "paths.csv").write_text("\n".join(plines) + "\n")
    return trace[-1], rms[-1]


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthetic_sweep")
    rows = ["flow,gliders,strategy,seed,status,final_trace,final_rms,"
            "psd_floor,gamma_retries,line_init_retries,fallbacks"]
    for flow in FLOWS:
        for gliders in COHORTS:
            for strategy in STRATEGIES:
                for seed in range(SEEDS):
                    run = root / f"{flow}_K{gliders}_{strategy}_s{seed}"
                    ft, fr = write_run(run, flow, gliders, strategy, seed)
                    rows.append(f"{flow},{gliders},{strategy},{seed},ok,"
                                f"{_fmt(ft)},{_fmt(fr)},{_fmt(0)},0,0,0")
    (root / "summary.csv").write_text("\n".join(rows) + "\n")
    return root


class TestRender:
    @pytest.mark.parametrize("flow", FLOWS)
    @pytest.mark.parametrize("kind", FIGURE_KINDS)
    def test_all_kinds_render_for_all_flows(self, sweep, tmp_path, kind, flow):
        out = tmp_path / f"{flow}_{kind}.png"
        n = render(sweep, kind, flow, out)
        assert out.exists() and out.stat().st_size > 0
        assert n > 0

    def test_trace_curves_have_twelve_styled_lines(self, sweep, tmp_path):
        n = render(sweep, "trace-curves", "center", tmp_path / "t.png")
        assert n == 12    # 4 cohorts x 3 strategies

    def test_styling_encodes_strategy_and_cohort(self, sweep):
        import matplotlib.pyplot as plt
        from glider_figs.render import COHORT_COLOR, STRATEGY_STYLE, build_curves_figure

        fig, drawn = build_curves_figure(sweep, "saddle", "trace")
        try:
            assert drawn == 12
            expect_ls = {"optimal": "-", "none": "--", "random": ":"}
            by_label = {ln.get_label(): ln for ln in fig.axes[0].lines}
            for cohort in (1, 2, 5, 10):
                for strategy, ls in expect_ls.items():
                    line = by_label[f"K={cohort} {strategy}"]
                    assert line.get_linestyle() == STRATEGY_STYLE[strategy] == ls
                    assert line.get_color() == COHORT_COLOR[cohort]
        finally:
            plt.close(fig)

    def test_single_run_draws_one_monotone_curve(self, tmp_path):
        import matplotlib.pyplot as plt
        from glider_figs.render import build_curves_figure

        root = tmp_path / "single"
        write_run(root / "center_K1_optimal_s0", "center", 1, "optimal", 0)
        (root / "summary.csv").write_text(
            "flow,gliders,strategy,seed,status,final_trace,final_rms,"
            "psd_floor,gamma_retries,line_init_retries,fallbacks\n"
            "center,1,optimal,0,ok,1,1,0,0,0,0\n")
        fig, drawn = build_curves_figure(root, "center", "trace")
        try:
            assert drawn == 1
            y = fig.axes[0].lines[0].get_ydata()
            assert np.all(np.diff(y) <= 0)
        finally:
            plt.close(fig)

    def test_rendering_is_read_only(self, sweep, tmp_path):
        import hashlib

        def tree_digest():
            h = hashlib.sha256()
            for p in sorted(sweep.rglob("*.csv")):
                h.update(p.read_bytes())
            return h.hexdigest()

        before = tree_digest()
        render(sweep, "trace-curves", "center", tmp_path / "ro.png")
        render(sweep, "path-zoom", "center", tmp_path / "ro2.png")
        assert tree_digest() == before

    def test_rerender_is_byte_identical(self, sweep, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        render(sweep, "trace-curves", "saddle", a)
        render(sweep, "trace-curves", "saddle", b)
        assert a.read_bytes() == b.read_bytes()

    def test_svg_rerender_is_byte_identical(self, sweep, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        render(sweep, "rms-curves", "center", a)
        render(sweep, "rms-curves", "center", b)
        assert a.read_bytes() == b.read_bytes()

    def test_no_matching_data_is_an_error_without_output(self, sweep, tmp_path):
        out = tmp_path / "never.png"
        with pytest.raises(RenderError, match="no data"):
            render(sweep, "trace-curves", "vortex", out)
        assert not out.exists()

    def test_schema_mismatch_names_columns(self, sweep, tmp_path):
        bad = tmp_path / "bad_sweep"
        bad.mkdir()
        (bad / "summary.csv").write_text("wrong,header\n1,2\n")
        with pytest.raises(SchemaError, match="flow,gliders,strategy,seed"):
            render(bad, "trace-curves", "center", tmp_path / "x.png")

    def test_metrics_schema_checked(self, sweep, tmp_path):
        run = sweep / "center_K1_optimal_s0"
        original = (run / "metrics.csv").read_text()
        try:
            (run / "metrics.csv").write_text("a,b,c\n1,2,3\n")
            with pytest.raises(SchemaError, match="obs_index"):
                render(sweep, "trace-curves", "center", tmp_path / "x.png")
        finally:
            (run / "metrics.csv").write_text(original)


class TestCli:
    def test_cli_renders(self, sweep, tmp_path, capsys):
        out = tmp_path / "cli.png"
        code = main(["--summary-dir", str(sweep), "--kind", "path-plot",
                     "--flow", "center", "--out", str(out)])
        assert code == 0
        assert out.exists()
        assert "curves" in capsys.readouterr().out

    def test_cli_no_data_exit_one(self, sweep, tmp_path, capsys):
        code = main(["--summary-dir", str(sweep), "--kind", "trace-curves",
                     "--flow", "nonesuch", "--out", str(tmp_path / "x.png")])
        assert code == 1
        assert "no data" in capsys.readouterr().err

    def test_cli_schema_error_exit_two(self, tmp_path, capsys):
        bad = tmp_path / "bad"
        bad.mkdir()
        (bad / "summary.csv").write_text("nope\n")
        code = main(["--summary-dir", str(bad), "--kind", "trace-curves",
                     "--flow", "center", "--out", str(tmp_path / "x.png")])
        assert code == 2
        assert "schema" in capsys.readouterr().err
