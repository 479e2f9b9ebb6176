/* tslint:disable */
/* eslint-disable */

/**
 * Noisy Kuramoto flow on the unit circle from `1 + amplitude·cos(2π(x − ½))`.
 */
export function kuramoto(kappa: number, amplitude: number, t_end: number, cells: number): string;

/**
 * The resting pair `½(δ_{−1/2} + δ_{1/2})` under the non-convex kernel: the stationary curve,
 * the collapsing closed form and an RK4 run that follows the explicit departure.
 */
export function nonunique_curves(t_end: number, samples: number): string;

/**
 * Porous-medium flow (`m = 2`) in self-similar variables from a centred box of the given width.
 */
export function porous_medium(width: number, tau_end: number, cells: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly kuramoto: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly nonunique_curves: (a: number, b: number) => [number, number, number, number];
    readonly porous_medium: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
