// Trains the same autoencoder twice on a synthetic set, once to the last
// epoch and once under GradStop, and prints both AUCs.

#include <iostream>

#include "gradstop/gradstop.hpp"

int main() {
  using namespace gradstop;

  SyntheticConfig synth;
  synth.scenario = Scenario::BlobFarGaussian;
  Rng data_rng(7);
  const Dataset ds = standardize(gen_synthetic(synth, data_rng));

  Hyperparameters hp = find_profile("ae").hp;
  hp.lr = 0.5;
  hp.epochs = 300;
  const ModelSpec spec{ModelKind::AE, Activation::Tanh};

  for (TrainMode mode : {TrainMode::Vanilla, TrainMode::GradStop}) {
    Rng rng(0);
    const RunResult r = train(ds, hp, spec, rng, mode);
    std::cout << to_string(mode) << ": returned epoch " << r.best_epoch << ", trained to " << r.stop_epoch
              << ", AUC " << *r.auc_selected << '\n';
  }
}
