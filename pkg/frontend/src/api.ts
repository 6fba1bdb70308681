// Typed client for the recommendation service. The UI never predicts
// locally; everything goes through these calls.

export interface ClassPrediction {
  label: string;
  probabilities: Record<string, number>;
}

export interface PredictionTriple {
  emotion: ClassPrediction;
  age: number;
  ethnicity: ClassPrediction;
}

export interface Track {
  track_id: string;
  title: string;
  artist_id: string;
  artist_name: string;
  album_id: string;
  album_name: string;
  track_link: string;
  artist_link: string;
  album_link: string;
}

export interface RecommendResponse {
  prediction: PredictionTriple;
  playlist_id: string;
  playlist_name: string;
  playlist_link: string;
  tracks: Track[];
}

export interface ApiError {
  code: string;
  message: string;
}

export class RequestFailed extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, body: ApiError) {
    super(body.message);
    this.status = status;
    this.code = body.code;
  }
}

// Backend base URL; empty string means same origin.
export const API_BASE: string = import.meta.env?.VITE_API_BASE ?? "";

const OPEN_BASE = "https://open.spotify.com";

export function entityLink(kind: "track" | "artist" | "album" | "playlist", id: string): string {
  if (!id) throw new Error("empty entity id");
  return `${OPEN_BASE}/${kind}/${id}`;
}

async function parseError(response: Response): Promise<RequestFailed> {
  let body: ApiError = { code: "unknown", message: `HTTP ${response.status}` };
  try {
    const doc = await response.json();
    if (doc?.error?.code) body = doc.error;
  } catch {
    // non-JSON error body: keep the fallback
  }
  return new RequestFailed(response.status, body);
}

export async function fetchHealth(base: string = API_BASE): Promise<boolean> {
  try {
    const response = await fetch(`${base}/healthz`);
    if (!response.ok) return false;
    const doc = await response.json();
    return doc?.status === "ok";
  } catch {
    return false;
  }
}

export async function recommend(snapshot: Blob, base: string = API_BASE): Promise<RecommendResponse> {
  const response = await fetch(`${base}/api/v1/recommend`, {
    method: "POST",
    headers: { "content-type": "image/png" },
    body: snapshot,
  });
  if (!response.ok) throw await parseError(response);
  return (await response.json()) as RecommendResponse;
}
