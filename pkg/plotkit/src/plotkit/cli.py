"""CLI: plot depth|robustness --csv PATH... --out PATH.png"""

import argparse

from .figures import FigureSpec, plot_depth, plot_robustness


def build_parser():
    parser = argparse.ArgumentParser(prog="plot")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in ("depth", "robustness"):
        p = sub.add_parser(kind)
        p.add_argument("--csv", nargs="+", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--title", default="")
        p.add_argument("--xlabel", default="")
        p.add_argument("--ylabel", default="test accuracy")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    figure = FigureSpec(csv_paths=list(args.csv), out_path=args.out,
                        title=args.title, xlabel=args.xlabel, ylabel=args.ylabel)
    render = plot_depth if args.kind == "depth" else plot_robustness
    path = render(figure)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
