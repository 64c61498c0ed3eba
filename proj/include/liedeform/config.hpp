#pragma once

namespace liedeform {

// Numerical thresholds shared across the library.  Every tolerance that a
// result depends on lives here so runs can be reproduced from a manifest.
struct Thresholds {
    double tau_orth = 1e-10;     // per-block orthogonality / unitarity drift
    double tau_cut = 1e-6;       // min distance of an eigenangle from pi
    double tau_rank = 1e-8;      // singular value cutoff for rank decisions
    double tau_torsion = 1e-8;   // distance to identity counting as torsion
    double tau_newton = 1e-10;   // Newton residual target
    double tau_rel = 1e-6;       // integer-relation residual tolerance
    double tau_replay = 1e-8;    // replay residual per recorded move
};

// Search budgets for the deformation drivers.  Word lengths are measured in
// letters of the free group being evaluated.
struct Budgets {
    int steer_len = 16;           // hard cap on steering word length
    int steer_start_len = 8;      // first rung of the escalation ladder
    int steer_candidates = 8;     // how many near-optimal words to retry
    int install_word_len = 6;     // cap for the installed last-entry word
    int cert_word_len = 4;        // word length cap inside density certificates
    int net_len_cap = 16;         // word length cap for net construction
    int net_samples = 10000;      // Monte Carlo coverage sample count
    int retries = 20;             // generic retry count for perturbation loops
    // Exhaustive steering is used while the word-count estimate stays below
    // this; beyond it the meet-in-the-middle table kicks in.
    long exhaustive_cap = 200000;
};

}  // namespace liedeform
