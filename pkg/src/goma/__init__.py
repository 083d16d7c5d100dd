"""Goal-oriented multiple access: threshold strategies on a collision channel."""
