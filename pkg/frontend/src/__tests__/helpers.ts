import { vi } from "vitest";
import type { RecommendResponse } from "../api";

export function sampleResponse(): RecommendResponse {
  return {
    prediction: {
      emotion: { label: "happy", probabilities: { angry: 0.02, happy: 0.93, neutral: 0.03, sad: 0.02 } },
      age: 27,
      ethnicity: { label: "asian", probabilities: { white: 0.1, black: 0.05, asian: 0.7, indian: 0.1, others: 0.05 } },
    },
    playlist_id: "pl-happy-27",
    playlist_name: "Upbeat Mix",
    playlist_link: "https://open.spotify.com/playlist/pl-happy-27",
    tracks: [
      {
        track_id: "abc",
        title: "First Song",
        artist_id: "art1",
        artist_name: "Artist One",
        album_id: "alb1",
        album_name: "Album One",
        track_link: "https://open.spotify.com/track/abc",
        artist_link: "https://open.spotify.com/artist/art1",
        album_link: "https://open.spotify.com/album/alb1",
      },
      {
        track_id: "def",
        title: "Second Song",
        artist_id: "art2",
        artist_name: "Artist Two",
        album_id: "alb2",
        album_name: "Album Two",
        track_link: "https://open.spotify.com/track/def",
        artist_link: "https://open.spotify.com/artist/art2",
        album_link: "https://open.spotify.com/album/alb2",
      },
      {
        track_id: "ghi",
        title: "Third Song",
        artist_id: "art3",
        artist_name: "Artist Three",
        album_id: "alb3",
        album_name: "Album Three",
        track_link: "https://open.spotify.com/track/ghi",
        artist_link: "https://open.spotify.com/artist/art3",
        album_link: "https://open.spotify.com/album/alb3",
      },
    ],
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export function errorResponse(code: string, message: string, status: number): Response {
  return jsonResponse({ error: { code, message } }, status);
}

/* Wires up everything Capture needs from the browser: a camera stream,
   a canvas that yields a PNG blob, and object URLs. */
export function stubCamera(): void {
  const fakeStream = { getTracks: () => [{ stop: () => {} }] } as unknown as MediaStream;
  Object.defineProperty(navigator, "mediaDevices", {
    configurable: true,
    value: { getUserMedia: vi.fn().mockResolvedValue(fakeStream) },
  });
  Object.defineProperty(HTMLMediaElement.prototype, "play", {
    configurable: true,
    value: vi.fn().mockResolvedValue(undefined),
  });
  Object.defineProperty(HTMLMediaElement.prototype, "srcObject", {
    configurable: true,
    writable: true,
    value: null,
  });
  HTMLCanvasElement.prototype.getContext = vi
    .fn()
    .mockReturnValue({ drawImage: () => {} }) as unknown as typeof HTMLCanvasElement.prototype.getContext;
  HTMLCanvasElement.prototype.toBlob = function (cb: BlobCallback) {
    cb(new Blob(["fake-png"], { type: "image/png" }));
  };
  URL.createObjectURL = vi.fn().mockReturnValue("blob:snapshot");
  URL.revokeObjectURL = vi.fn();
}

export function denyCamera(): void {
  Object.defineProperty(navigator, "mediaDevices", {
    configurable: true,
    value: { getUserMedia: vi.fn().mockRejectedValue(new DOMException("denied", "NotAllowedError")) },
  });
}
