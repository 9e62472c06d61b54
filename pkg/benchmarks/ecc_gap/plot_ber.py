import argparse
from collections import defaultdict

import numpy as np
import matplotlib.pyplot as plt

from ssmark.bench import read_bench_csv


def read_data(filename):
    # Dict[attack kind -> Dict[column -> List[(strength, value)]]]
    data = defaultdict(lambda: defaultdict(list))

    for line in read_bench_csv(filename):
        for column in ("ber_raw", "ber_ecc"):
            data[line["attack"]][column].append((line["strength"], line[column]))

    return data


def column2style(column):
    return {"ber_raw": ("-o", "C1", "Without ECC"),
            "ber_ecc": ("-*", "C0", "With ECC")}[column]


def plot_ber(data, kind, title, output, show):
    fig, ax = plt.subplots()
    figure_size = (5, 4)

    curves = []
    legends = []
    for column in ("ber_raw", "ber_ecc"):
        points = data[kind][column]
        if not points:
            continue
        xs, ys = zip(*points)
        xs, ys = np.array(xs), np.array(ys)
        indices = np.argsort(xs)
        xs, ys = xs[indices], ys[indices]
        fmt, color, legend = column2style(column)
        curve = ax.plot(xs, ys, fmt, color=color)

        curves.append(curve[0])
        legends.append(legend)

    ax.set_ylim(bottom=0, top=1)
    ax.set_ylabel("BER")
    if kind == "quantize":
        ax.set_xlabel("Quality factor")
        # harsher compression to the right
        ax.invert_xaxis()
    else:
        ax.set_xlabel("Noise sigma")
    ax.legend(curves, legends)
    ax.set_title(title)

    if show:
        plt.show()

    fig.set_size_inches(figure_size)
    fig.savefig(output, bbox_inches='tight')
    print(f"Output the plot to {output}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--input", type=str, default="res_ecc_gap_boat_tau0.06.csv")
    parser.add_argument("--output", type=str, default="ber_vs_qf.png")
    parser.add_argument("--kind", type=str, default="quantize",
                        choices=["quantize", "awgn"])
    parser.add_argument("--show", action="store_true")
    args = parser.parse_args()

    data = read_data(args.input)
    plot_ber(data, args.kind, f"{args.kind}: {args.input}", args.output, args.show)
