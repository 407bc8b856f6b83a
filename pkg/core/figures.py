import plotly.express as px
import plotly.graph_objects as go
from plotly.graph_objects import Layout


axis_config = {
    'gridcolor': '#eee',
    'linecolor': '#444',
    'zerolinecolor': '#eee',
    'mirror': True
}

plot_layout = Layout(
    plot_bgcolor='rgba(0,0,0,0)',
    title={'y': 0.98, 'x': 0.5, 'xanchor': 'center', 'yanchor': 'top'},
    height=450,
    margin=dict(l=20, r=20, b=20, t=35),
    yaxis=axis_config,
    xaxis=axis_config,
    showlegend=True
)


def add_fig_trace(i, fig, x, y, name, error=None, hovertemplate=None, mode='lines+markers'):
    '''
    Add one scheme's curve to fig, cycling through the qualitative palette.

    Params:
        i (int): trace index, selects the color
        fig (Figure)
        x, y (array-like): coordinates
        name (str): legend entry
        error (array-like): symmetric error bars on y
        hovertemplate (str)
        mode (str): plotly scatter mode
    '''

    colors = px.colors.qualitative.Plotly
    i %= len(colors)

    fig.add_trace(go.Scatter(
        x=x,
        y=y,
        mode=mode,
        name=name,
        line=dict(color=colors[i], width=1),
        error_y=None if error is None else dict(type='data', array=error, visible=True),
        hovertemplate=hovertemplate))


def ser_figure(results, axis_title):
    '''
    SER curves, one per scheme, on a log axis with binomial error bars.
    '''

    fig = go.Figure(layout=plot_layout)
    for i, (scheme, rows) in enumerate(results.groupby('scheme', sort=False)):
        rows = rows.sort_values('axis')
        error = (rows['ser'] * (1 - rows['ser']) / rows['symbols']) ** 0.5
        add_fig_trace(i, fig, rows['axis'], rows['ser'], scheme, error=error,
                      hovertemplate='SER = %{y:.3e}<br>' + axis_title + ' = %{x}')

    fig.update_layout(title_text='Symbol error rate', xaxis_title=axis_title, yaxis_title='SER')
    fig.update_yaxes(type='log')
    return fig


def trace_figure(traces, reference=None):
    '''
    ADMM convergence: objective (left) and residual norms on a log axis.
    '''

    objective = go.Figure(layout=plot_layout)
    residual = go.Figure(layout=plot_layout)

    for i, (scheme, trace) in enumerate(traces.items()):
        add_fig_trace(i, objective, trace['iter'], trace['objective'], scheme, mode='lines')
        add_fig_trace(2 * i, residual, trace['iter'], trace['primal'], f'{scheme} primal', mode='lines')
        add_fig_trace(2 * i + 1, residual, trace['iter'], trace['dual'], f'{scheme} dual', mode='lines')

    if reference is not None:
        objective.add_hline(y=reference, line_dash='dot', annotation_text='oracle')

    objective.update_layout(title_text='Objective value', xaxis_title='Iteration', yaxis_title='objective')
    residual.update_layout(title_text='Residual norms', xaxis_title='Iteration', yaxis_title='norm')
    residual.update_yaxes(type='log')
    return objective, residual


def timing_figure(timing):
    fig = go.Figure(layout=plot_layout)
    fig.add_trace(go.Bar(
        x=timing['scheme'],
        y=timing['median_ms'],
        marker_color=px.colors.qualitative.Plotly[0],
        hovertemplate='%{x}<br>median = %{y:.2f} ms'))
    fig.update_layout(title_text='Execution time per block', xaxis_title='Scheme',
                      yaxis_title='median time (ms)', showlegend=False)
    return fig


def write_figures(path, *figures):
    '''
    Write one static HTML page holding all figures.
    '''

    with open(path, 'w') as out:
        for i, fig in enumerate(figures):
            out.write(fig.to_html(full_html=False, include_plotlyjs='cdn' if i == 0 else False))
    return path
