/* tslint:disable */
/* eslint-disable */

/**
 * One fBm path on [0, 1] with `n` cells and its image under Z^α, flattened
 * as [t_0..t_n, X_0..X_n, Z_0..Z_n].
 */
export function fbm_path(hurst: number, alpha: number, n: number, seed: number): Float64Array;

/**
 * s ↦ z(t, s) for fBm at `n` interior points of (0, t), flattened as (s, z) pairs.
 */
export function kernel_slice(hurst: number, t: number, n: number): Float64Array;

/**
 * `n` samples of H^α(λ) on [−λ_max, λ_max], flattened as (λ, Re, Im, |H|) quadruples.
 */
export function transfer_curve(alpha: number, lambda_max: number, n: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly fbm_path: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly kernel_slice: (a: number, b: number, c: number) => [number, number, number, number];
    readonly transfer_curve: (a: number, b: number, c: number) => [number, number, number, number];
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
