# detector/training.py
import numpy as np
from logzero import logger

from autograd.optim import Adam
from autograd.tensor import Tape
from encoders.model import SegoModel
from objective.losses import total_loss
from sego.exceptions import ConfigurationError
from triplet.batch import collate
from triplet.views import build_dataset_views


def batch_indices(order, batch_size):
    """Split `order` into batches; a trailing batch of one graph joins the previous batch."""
    order = np.asarray(order, dtype=np.int64)
    batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    if len(batches) > 1 and len(batches[-1]) < 2:
        batches[-2] = np.concatenate([batches[-2], batches.pop()])
    return batches


def loss_for(model, batch, cfg):
    return total_loss(
        model(batch),
        cfg.theta,
        partner=cfg.tree_partner.value,
        use_tree=not cfg.disable_tree,
        use_local=not cfg.disable_local,
        use_global=not cfg.disable_global,
    )


def train(dataset, cfg, views=None, log=None, run=0):
    """Fit a model on ID graphs only; no labels are read.

    `log`, when given, is called with one record per optimisation step.
    """
    if len(dataset) < 2:
        raise ConfigurationError(f"{dataset.name}: training needs at least 2 graphs, got {len(dataset)}")
    if views is None:
        views = build_dataset_views(dataset, cfg.k, cfg.r, workers=cfg.workers)

    model = SegoModel.init(dataset.feature_dim, cfg.r + 1, cfg)
    optimizer = Adam(model.parameters(), lr=cfg.learning_rate)
    shuffle = np.random.default_rng([cfg.seed, run])
    logger.info(f"Training on {dataset.name}: {len(dataset)} graphs, {cfg.epochs} epochs, "
                f"batch size {cfg.batch_size}, {len(model.parameters())} parameter tensors")

    for epoch in range(1, cfg.epochs + 1):
        totals = []
        for step, idx in enumerate(batch_indices(shuffle.permutation(len(views)), cfg.batch_size)):
            batch = collate([views[i] for i in idx])
            optimizer.zero_grad()
            with Tape() as tape:
                report = loss_for(model, batch, cfg)
            tape.backward(report.loss)
            optimizer.step()
            totals.append(report.total)
            if log is not None:
                log({"run": run, "epoch": epoch, "step": step, **report.as_record()})
        model.epoch_losses.append(float(np.mean(totals)))
        if epoch == 1 or epoch == cfg.epochs or epoch % 10 == 0:
            logger.info(f"run {run} epoch {epoch}/{cfg.epochs}: loss {model.epoch_losses[-1]:.4f}")
    return model
