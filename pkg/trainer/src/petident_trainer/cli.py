"""Command-line training entry point."""

from __future__ import annotations

import argparse
import sys

from .data import read_window_manifest
from .export import export_model
from .model import build_model
from .train import TOY_RECIPE, TrainingRecipe, finetune


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="petident-train", description="Fine-tune a dog identity classifier")
    parser.add_argument("manifest", help="window manifest CSV (image_path,identity_id)")
    parser.add_argument("--out", required=True, help="ONNX export path (sidecar written alongside)")
    parser.add_argument("--base", default="compact", choices=["compact", "inception_v3"])
    parser.add_argument("--epochs", type=int, default=TOY_RECIPE.epochs)
    parser.add_argument("--learning-rate", type=float, default=TOY_RECIPE.learning_rate)
    parser.add_argument("--batch-size", type=int, default=TOY_RECIPE.batch_size)
    parser.add_argument("--input-side", type=int, default=TOY_RECIPE.input_side)
    parser.add_argument("--seed", type=int, default=TOY_RECIPE.seed)
    parser.add_argument("--dropout", type=float, default=0.5)
    parser.add_argument("--freeze-trunk", action="store_true")
    parser.add_argument("--weights", help="local base weights file (inception_v3 only)")
    args = parser.parse_args(argv)

    try:
        _, identities = read_window_manifest(args.manifest)
        model = build_model(
            len(identities), base_architecture=args.base, dropout=args.dropout, weights_path=args.weights
        )
        recipe = TrainingRecipe(
            base_architecture=args.base,
            dropout=args.dropout,
            epochs=args.epochs,
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            input_side=args.input_side,
            seed=args.seed,
            freeze_trunk=args.freeze_trunk,
        )
        history = finetune(model, args.manifest, recipe)
        print(f"trained {args.epochs} epochs; train accuracy {history.final_train_accuracy:.4f}")
        path = export_model(model, args.out, identities, input_side=args.input_side)
        print(f"exported {path} (+ sidecar {path.with_suffix('.json').name})")
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
