/* tslint:disable */
/* eslint-disable */

/**
 * ln|𝒴_h(z, σ)| for the tangent coefficient at z = re_z + i·t, t ∈ [−im_max, im_max].
 * Points that hit the excluded lattice come back as NaN so the plot shows a gap.
 */
export function homogeneous_log_modulus(re_z: number, im_max: number, samples: number, sigma: number, truncation: number): Float64Array;

/**
 * E_{α,β}^γ(x) on a real interval, interleaved as x, Re E, Im E.
 */
export function mittag_leffler(alpha: number, beta: number, gamma: number, x_min: number, x_max: number, samples: number): Float64Array;

/**
 * Samples of S± on [0, 4πq], interleaved as x₀, y₀, x₁, y₁, …
 */
export function s_curve(plus: boolean, theta1: number, theta2: number, p: number, q: number, q2: number, samples: number): Float64Array;

/**
 * Zero table of S± over one period as JSON (`period`, `entries`, `count`, `complex`, `lattice_rule`).
 */
export function zero_table(plus: boolean, theta1: number, theta2: number, p: number, q: number, q2: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly homogeneous_log_modulus: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly mittag_leffler: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly s_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly zero_table: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
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
