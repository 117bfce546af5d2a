/* tslint:disable */
/* eslint-disable */

/**
 * Planar elliptic walk on the hyperbolic plane of curvature `−k²`, as
 * Poincaré-disk coordinates `[x₀, y₀, x₁, y₁, …]` starting at the centre.
 * Stops early if the walk gets too far out to represent.
 */
export function poincare_walk(k: number, a: number, b: number, steps: number, seed: bigint): Float64Array;

/**
 * Distance from the origin after each step of the planar elliptic walk;
 * `k = 0` selects the flat plane. Returns `steps + 1` radii.
 */
export function radius_series(k: number, a: number, b: number, steps: number, seed: bigint): Float64Array;

/**
 * The quadratic sandwich around `F` for a step of length `d_tot`: rows
 * `[φ, lower, F, upper]` for `n` values of `φ` spread over `[−1, 1]`.
 */
export function sandwich_curves(k: number, d_tot: number, n: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly poincare_walk: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly radius_series: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly sandwich_curves: (a: number, b: number, c: number) => [number, number, number, number];
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
