"""Customer lifetime value prediction with stacked tree and linear regressors."""
