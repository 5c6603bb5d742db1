"""Fine-tuning: seeded, CPU-friendly, and reproducible per platform."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import torch
from torch.utils.data import DataLoader

from .data import WindowDataset
from .model import DEFAULT_DROPOUT, IdentityClassifier, freeze_features


@dataclass(frozen=True)
class TrainingRecipe:
    """Hyperparameters plus the staged-training plan.

    ``stages`` lists window-manifest paths trained in order (the classic
    two-stage setup puts a generic-identity set first and the target set
    second); ``finetune`` runs one stage, ``run_stages`` all of them.
    """

    base_architecture: str = "inception_v3"
    dropout: float = DEFAULT_DROPOUT
    epochs: int = 10
    learning_rate: float = 1e-3
    batch_size: int = 16
    input_side: int = 299
    seed: int = 0
    freeze_trunk: bool = False
    stages: tuple[str, ...] = ()
    export_path: str | None = None


# The documented toy schedule: compact base at side 128 so the whole run
# (4 identities x 20 windows) finishes on a CPU in seconds.
TOY_RECIPE = TrainingRecipe(
    base_architecture="compact",
    epochs=12,
    learning_rate=1e-3,
    batch_size=16,
    input_side=128,
    seed=7,
)


@dataclass
class TrainingHistory:
    epoch_losses: list[float] = field(default_factory=list)
    final_train_accuracy: float = 0.0


def _train_accuracy(model: IdentityClassifier, loader: DataLoader) -> float:
    model.eval()
    correct = total = 0
    with torch.no_grad():
        for batch, labels in loader:
            predicted = model(batch).argmax(dim=1)
            correct += int((predicted == labels).sum())
            total += len(labels)
    return correct / total if total else 0.0


def finetune(
    model: IdentityClassifier,
    manifest_path: str | Path,
    recipe: TrainingRecipe,
) -> TrainingHistory:
    """Train on one window manifest; zero epochs leaves weights untouched."""
    dataset = WindowDataset(manifest_path, input_side=recipe.input_side)
    if len(dataset.identities) < 2:
        raise ValueError(f"manifest {manifest_path} has {len(dataset.identities)} class(es); need at least 2")
    if len(dataset.identities) != model.num_classes:
        raise ValueError(
            f"manifest has {len(dataset.identities)} identities, model expects {model.num_classes}"
        )

    history = TrainingHistory()
    if recipe.epochs == 0:
        history.final_train_accuracy = _train_accuracy(
            model, DataLoader(dataset, batch_size=recipe.batch_size)
        )
        return history

    torch.manual_seed(recipe.seed)
    generator = torch.Generator().manual_seed(recipe.seed)
    loader = DataLoader(
        dataset,
        batch_size=recipe.batch_size,
        shuffle=True,
        generator=generator,
        num_workers=0,
    )
    freeze_features(model, recipe.freeze_trunk)
    trainable = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(trainable, lr=recipe.learning_rate)
    loss_fn = torch.nn.CrossEntropyLoss()

    model.train()
    for _ in range(recipe.epochs):
        epoch_loss = 0.0
        batches = 0
        for batch, labels in loader:
            optimizer.zero_grad()
            loss = loss_fn(model.head_logits(batch), labels)
            loss.backward()
            optimizer.step()
            epoch_loss += loss.item()
            batches += 1
        history.epoch_losses.append(epoch_loss / max(batches, 1))

    history.final_train_accuracy = _train_accuracy(
        model, DataLoader(dataset, batch_size=recipe.batch_size)
    )
    return history


def run_stages(model: IdentityClassifier, recipe: TrainingRecipe) -> list[TrainingHistory]:
    """Run every staged manifest in order with the same hyperparameters."""
    if not recipe.stages:
        raise ValueError("recipe lists no stages")
    return [finetune(model, manifest, replace(recipe, stages=())) for manifest in recipe.stages]
