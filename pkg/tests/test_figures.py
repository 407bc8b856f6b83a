import pandas as pd

from core.figures import ser_figure, timing_figure, trace_figure, write_figures


def results_table():
    return pd.DataFrame({
        'scheme': ['zf', 'zf', 'ci-blp-oracle', 'ci-blp-oracle'],
        'axis': [20.0, 10.0, 10.0, 20.0],
        'errors': [4, 40, 10, 0],
        'symbols': [1000] * 4,
        'ser': [0.004, 0.04, 0.01, 0.0]})


def test_ser_figure():
    fig = ser_figure(results_table(), 'SNR (dB)')
    assert [trace.name for trace in fig.data] == ['zf', 'ci-blp-oracle']
    assert list(fig.data[0].x) == [10.0, 20.0]
    assert fig.layout.yaxis.type == 'log'


def test_trace_figure():
    trace = pd.DataFrame({'iter': [1, 2, 3], 'objective': [1.0, 0.6, 0.5],
                          'primal': [1.0, 0.1, 0.01], 'dual': [float('nan'), 0.3, 0.02]})
    objective, residual = trace_figure({'scheme1': trace, 'scheme2': trace}, reference=0.45)
    assert len(objective.data) == 2
    assert len(residual.data) == 4


def test_write_figures(tmp_path):
    timing = pd.DataFrame({'scheme': ['zf', 'ci-blp-admm2'], 'median_ms': [0.1, 2.0]})
    path = write_figures(tmp_path / 'report.html', ser_figure(results_table(), 'SNR (dB)'), timing_figure(timing))
    html = path.read_text()
    assert html.count('cdn.plot.ly') == 1
    assert 'Execution time per block' in html
