// Typed, GET-only client for the ordination grid server. Every payload is
// immutable once fetched; ordination entries are cached per index so slider
// movement refetches at most the entry under the handle.

export interface SamplePoint {
  id: string;
  coords: number[];
  metadata: Record<string, string | number>;
}

export interface VariablePoint {
  name: string;
  coords: number[];
}

export interface GridEntry {
  r: number;
  eigenvalues: number[];
  variance_fractions: number[];
  samples: SamplePoint[];
  variables: VariablePoint[];
}

export interface Meta {
  r_values: number[];
  k: number;
  n: number;
  p: number;
  metadata_columns: string[];
  variance_fractions: number[][];
  r_hat: number | null;
  sigma2: number | null;
  method?: string;
}

export interface Profile {
  profile_trace: [number, number][] | null;
  r_hat: number | null;
}

async function getJson<T>(url: string): Promise<T> {
  const resp = await fetch(url, { method: "GET" });
  if (!resp.ok) {
    throw new Error(`GET ${url} failed: ${resp.status}`);
  }
  return (await resp.json()) as T;
}

export class GridClient {
  private cache = new Map<number, GridEntry>();
  fetchCount = 0;

  constructor(private base: string = "") {}

  async meta(): Promise<Meta> {
    return getJson<Meta>(`${this.base}/api/meta`);
  }

  async profile(): Promise<Profile> {
    return getJson<Profile>(`${this.base}/api/profile`);
  }

  cached(index: number): GridEntry | undefined {
    return this.cache.get(index);
  }

  async ordination(index: number): Promise<GridEntry> {
    const hit = this.cache.get(index);
    if (hit !== undefined) {
      return hit;
    }
    this.fetchCount += 1;
    const entry = await getJson<GridEntry>(`${this.base}/api/ordination/${index}`);
    this.cache.set(index, entry);
    return entry;
  }
}
